//! Experiment sweeps over synthetic instances, per-run metrics, and
//! aggregate tables.

pub mod stats;

use crate::heuristics::{csa_plan_default, edf_plan, ndf_plan, simulate_plan, FleetPlan};
use crate::instance::{generate_synthetic, GeneratorConfig, Instance, InstanceError};
use crate::milp::{enumerate_optimal, Alphas, EnumerationConfig, MilpError};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("oracle refused: {0}")]
    OracleRefused(String),
    #[error("nothing to summarize")]
    Empty,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error("cannot write {0}: {1}")]
    Io(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Csa,
    Edf,
    Ndf,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Csa, Method::Edf, Method::Ndf, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Csa => "csa",
            Method::Edf => "edf",
            Method::Ndf => "ndf",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown method {s:?} (expected csa, edf, ndf or oracle)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Deliveries,
    Ratio,
    Cps,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Deliveries => "deliveries",
            Sweep::Ratio => "ratio",
            Sweep::Cps => "cps",
        }
    }
}

impl FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deliveries" | "d" => Ok(Sweep::Deliveries),
            "ratio" | "r" => Ok(Sweep::Ratio),
            "cps" | "c" => Ok(Sweep::Cps),
            other => Err(format!("unknown sweep {other:?} (expected deliveries, ratio or cps)")),
        }
    }
}

/// One grid point: instance size parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub deliveries: usize,
    /// Deliveries per EV.
    pub ratio: f64,
    pub cps: usize,
}

impl Point {
    pub fn n_evs(&self) -> usize {
        ((self.deliveries as f64 / self.ratio).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub sweep: Sweep,
    pub values: Vec<f64>,
    /// Parameters held fixed; the swept one is overridden per value.
    pub fixed: Point,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub oracle_limits: EnumerationConfig,
    /// Timed repetitions per run; the median is reported.
    #[serde(default = "one")]
    pub repeats: usize,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn new(sweep: Sweep, values: Vec<f64>, fixed: Point, seeds: Vec<u64>, methods: Vec<Method>) -> Self {
        Self {
            sweep,
            values,
            fixed,
            seeds,
            methods,
            output_dir: None,
            generator: GeneratorConfig::default(),
            oracle_limits: EnumerationConfig::default(),
            repeats: 1,
        }
    }

    pub fn point(&self, value: f64) -> Point {
        let mut p = self.fixed;
        match self.sweep {
            Sweep::Deliveries => p.deliveries = value.round() as usize,
            Sweep::Ratio => p.ratio = value,
            Sweep::Cps => p.cps = value.round() as usize,
        }
        p
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.values.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            return Err(BenchError::Config("values, seeds and methods must be non-empty".into()));
        }
        if self.repeats == 0 {
            return Err(BenchError::Config("repeats must be >= 1".into()));
        }
        for &v in &self.values {
            let p = self.point(v);
            if p.deliveries == 0 || p.cps == 0 || !(p.ratio.is_finite() && p.ratio > 0.0) {
                return Err(BenchError::Config(format!(
                    "{} = {v} gives an empty instance (deliveries and cps >= 1, ratio > 0)",
                    self.sweep.name()
                )));
            }
            if self.methods.contains(&Method::Oracle) {
                let l = &self.oracle_limits;
                // The depot joins the charging sites only when mid-day
                // depot charging is enabled.
                let sites = p.cps + usize::from(self.generator.depot_midday_charging);
                if p.deliveries > l.max_deliveries || p.n_evs() > l.max_evs || sites > l.max_cps {
                    return Err(BenchError::OracleRefused(format!(
                        "{} = {v}: {} deliveries, {} EVs, {} charging sites exceed limits {}/{}/{}",
                        self.sweep.name(),
                        p.deliveries,
                        p.n_evs(),
                        sites,
                        l.max_deliveries,
                        l.max_evs,
                        l.max_cps
                    )));
                }
            }
        }
        self.generator.validate()?;
        Ok(())
    }
}

/// Column order of `metrics.csv`.
pub const METRICS_HEADER: [&str; 13] = [
    "method",
    "seed",
    "n_deliveries",
    "ratio",
    "n_cps",
    "n_evs",
    "served",
    "avg_cost_per_served",
    "elapsed_ms",
    "objective",
    "total_cost",
    "total_distance",
    "feasible",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub seed: u64,
    pub n_deliveries: usize,
    pub ratio: f64,
    pub n_cps: usize,
    pub n_evs: usize,
    pub served: usize,
    pub avg_cost_per_served: f64,
    pub elapsed_ms: f64,
    pub objective: f64,
    pub total_cost: f64,
    pub total_distance: f64,
    pub feasible: bool,
}

impl MetricsRow {
    pub fn sweep_value(&self, sweep: Sweep) -> f64 {
        match sweep {
            Sweep::Deliveries => self.n_deliveries as f64,
            Sweep::Ratio => self.ratio,
            Sweep::Cps => self.n_cps as f64,
        }
    }
}

/// Runs one planner on `inst`, returning the plan and the median time in ms.
pub fn run_method(
    inst: &Instance,
    method: Method,
    limits: &EnumerationConfig,
    repeats: usize,
) -> Result<(FleetPlan, f64), BenchError> {
    let mut times = Vec::with_capacity(repeats);
    let mut plan = None;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let p = match method {
            Method::Csa => csa_plan_default(inst),
            Method::Edf => edf_plan(inst),
            Method::Ndf => ndf_plan(inst),
            Method::Oracle => enumerate_optimal(inst, limits)?.plan,
        };
        times.push(t.elapsed().as_secs_f64() * 1e3);
        plan = Some(p);
    }
    Ok((plan.expect("at least one repeat"), stats::median(&times)))
}

/// Every (value, seed, method) cell in order. Timing covers the planner
/// only, not generation or simulation.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<MetricsRow>, BenchError> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.values.len() * config.seeds.len() * config.methods.len());
    for &v in &config.values {
        let p = config.point(v);
        for &seed in &config.seeds {
            let inst = generate_synthetic(seed, p.deliveries, p.cps, p.n_evs(), &config.generator)?;
            let alphas = config
                .oracle_limits
                .alphas
                .unwrap_or_else(|| Alphas::default_for(&inst));
            for &method in &config.methods {
                let (plan, elapsed_ms) = run_method(&inst, method, &config.oracle_limits, config.repeats)?;
                let sim = simulate_plan(&inst, &plan).expect("planner output references instance nodes");
                rows.push(MetricsRow {
                    method,
                    seed,
                    n_deliveries: p.deliveries,
                    ratio: p.ratio,
                    n_cps: p.cps,
                    n_evs: p.n_evs(),
                    served: sim.served_count,
                    avg_cost_per_served: sim.cost_per_served,
                    elapsed_ms,
                    objective: sim.objective(alphas.alpha1, alphas.alpha2),
                    total_cost: sim.total_cost,
                    total_distance: sim.total_distance,
                    feasible: sim.feasible,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep: Sweep,
    pub value: f64,
    pub method: Method,
    pub runs: usize,
    pub served_mean: f64,
    pub served_std: f64,
    pub avg_cost_mean: f64,
    pub avg_cost_std: f64,
    pub elapsed_ms_mean: f64,
    pub elapsed_ms_std: f64,
    pub objective_mean: f64,
    /// (base − csa) / base on mean avg cost, for CSA rows only.
    pub reduction_vs_edf: Option<f64>,
    pub reduction_vs_ndf: Option<f64>,
}

/// Relative cost reduction of `cost` against `base`; `None` when the base
/// is zero.
pub fn reduction(base: f64, cost: f64) -> Option<f64> {
    if base == 0.0 {
        None
    } else {
        Some((base - cost) / base)
    }
}

/// Mean and sample standard deviation per (sweep value, method).
pub fn summarize(rows: &[MetricsRow], sweep: Sweep) -> Result<Vec<SummaryRow>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut keys: Vec<(f64, Method)> = Vec::new();
    for r in rows {
        let k = (r.sweep_value(sweep), r.method);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<SummaryRow> = keys
        .iter()
        .map(|&(value, method)| {
            let g: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.method == method && r.sweep_value(sweep) == value)
                .collect();
            let col = |f: fn(&MetricsRow) -> f64| g.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let served = col(|r| r.served as f64);
            let cost = col(|r| r.avg_cost_per_served);
            let el = col(|r| r.elapsed_ms);
            SummaryRow {
                sweep,
                value,
                method,
                runs: g.len(),
                served_mean: stats::mean(&served),
                served_std: stats::sample_std(&served),
                avg_cost_mean: stats::mean(&cost),
                avg_cost_std: stats::sample_std(&cost),
                elapsed_ms_mean: stats::mean(&el),
                elapsed_ms_std: stats::sample_std(&el),
                objective_mean: stats::mean(&col(|r| r.objective)),
                reduction_vs_edf: None,
                reduction_vs_ndf: None,
            }
        })
        .collect();
    let lookup: Vec<(f64, Method, f64)> = out.iter().map(|s| (s.value, s.method, s.avg_cost_mean)).collect();
    let base = |v: f64, m: Method| lookup.iter().find(|x| x.0 == v && x.1 == m).map(|x| x.2);
    for s in out.iter_mut().filter(|s| s.method == Method::Csa) {
        s.reduction_vs_edf = base(s.value, Method::Edf).and_then(|b| reduction(b, s.avg_cost_mean));
        s.reduction_vs_ndf = base(s.value, Method::Ndf).and_then(|b| reduction(b, s.avg_cost_mean));
    }
    Ok(out)
}

fn io_err(path: &Path, e: impl fmt::Display) -> BenchError {
    BenchError::Io(path.display().to_string(), e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(METRICS_HEADER).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.seed.to_string(),
            r.n_deliveries.to_string(),
            r.ratio.to_string(),
            r.n_cps.to_string(),
            r.n_evs.to_string(),
            r.served.to_string(),
            r.avg_cost_per_served.to_string(),
            r.elapsed_ms.to_string(),
            r.objective.to_string(),
            r.total_cost.to_string(),
            r.total_distance.to_string(),
            r.feasible.to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Column order of `summary.csv`.
pub const SUMMARY_HEADER: [&str; 13] = [
    "sweep",
    "value",
    "method",
    "runs",
    "served_mean",
    "served_std",
    "avg_cost_mean",
    "avg_cost_std",
    "elapsed_ms_mean",
    "elapsed_ms_std",
    "objective_mean",
    "reduction_vs_edf",
    "reduction_vs_ndf",
];

pub fn write_summary_csv(path: &Path, summary: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(SUMMARY_HEADER).map_err(|e| io_err(path, e))?;
    for s in summary {
        w.write_record([
            s.sweep.name().to_string(),
            s.value.to_string(),
            s.method.to_string(),
            s.runs.to_string(),
            s.served_mean.to_string(),
            s.served_std.to_string(),
            s.avg_cost_mean.to_string(),
            s.avg_cost_std.to_string(),
            s.elapsed_ms_mean.to_string(),
            s.elapsed_ms_std.to_string(),
            s.objective_mean.to_string(),
            opt(s.reduction_vs_edf),
            opt(s.reduction_vs_ndf),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One `x,<method>...` table per metric: `plot_served.csv`,
/// `plot_avg_cost.csv`, `plot_elapsed_ms.csv`.
pub fn write_plot_data(dir: &Path, summary: &[SummaryRow]) -> Result<Vec<PathBuf>, BenchError> {
    let mut methods: Vec<Method> = summary.iter().map(|s| s.method).collect();
    methods.sort();
    methods.dedup();
    let mut xs: Vec<f64> = summary.iter().map(|s| s.value).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    type Metric = (&'static str, fn(&SummaryRow) -> f64);
    let metrics: [Metric; 3] = [
        ("served", |s| s.served_mean),
        ("avg_cost", |s| s.avg_cost_mean),
        ("elapsed_ms", |s| s.elapsed_ms_mean),
    ];
    let mut written = Vec::new();
    for (name, f) in metrics {
        let path = dir.join(format!("plot_{name}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        let mut header = vec!["x".to_string()];
        header.extend(methods.iter().map(|m| m.to_string()));
        w.write_record(&header).map_err(|e| io_err(&path, e))?;
        for &x in &xs {
            let mut rec = vec![x.to_string()];
            for &m in &methods {
                rec.push(
                    summary
                        .iter()
                        .find(|s| s.value == x && s.method == m)
                        .map(|s| f(s).to_string())
                        .unwrap_or_default(),
                );
            }
            w.write_record(&rec).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `metrics.csv`, `summary.csv` and the plot tables into `dir`.
pub fn write_outputs(dir: &Path, rows: &[MetricsRow], sweep: Sweep) -> Result<Vec<SummaryRow>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let summary = summarize(rows, sweep)?;
    write_metrics_csv(&dir.join("metrics.csv"), rows)?;
    write_summary_csv(&dir.join("summary.csv"), &summary)?;
    write_plot_data(dir, &summary)?;
    Ok(summary)
}

/// Named sweep presets: `small`, `oracle`, `scaling`, `ratio`, `cps`.
pub fn preset(name: &str, seeds: Vec<u64>) -> Option<ExperimentConfig> {
    use Method::*;
    let heur = vec![Csa, Edf, Ndf];
    let step = |a: usize, b: usize, s: usize| (a..=b).step_by(s).map(|v| v as f64).collect::<Vec<_>>();
    let cfg = match name {
        "small" => ExperimentConfig::new(
            Sweep::Deliveries,
            vec![5.0, 10.0, 15.0],
            Point {
                deliveries: 5,
                ratio: 5.0,
                cps: 5,
            },
            seeds,
            heur,
        ),
        "oracle" => ExperimentConfig::new(
            Sweep::Deliveries,
            vec![3.0, 4.0, 5.0],
            Point {
                deliveries: 5,
                ratio: 5.0,
                cps: 2,
            },
            seeds,
            vec![Csa, Edf, Ndf, Oracle],
        ),
        "scaling" => ExperimentConfig::new(
            Sweep::Deliveries,
            step(25, 200, 25),
            Point {
                deliveries: 200,
                ratio: 5.0,
                cps: 5,
            },
            seeds,
            heur,
        ),
        "ratio" => ExperimentConfig::new(
            Sweep::Ratio,
            vec![5.0, 10.0, 15.0],
            Point {
                deliveries: 200,
                ratio: 5.0,
                cps: 50,
            },
            seeds,
            heur,
        ),
        "cps" => ExperimentConfig::new(
            Sweep::Cps,
            step(5, 100, 5),
            Point {
                deliveries: 200,
                ratio: 5.0,
                cps: 5,
            },
            seeds,
            heur,
        ),
        _ => return None,
    };
    Some(cfg)
}

pub const PRESETS: [&str; 5] = ["small", "oracle", "scaling", "ratio", "cps"];
