use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use edrp_core::bench::{self, ExperimentConfig, Method, Point, Sweep};
use edrp_core::heuristics::{csa_plan, edf_plan_with, ndf_plan, EdfOrder};
use edrp_core::instance::{generate_synthetic, load_instance, save_instance, GeneratorConfig, InstanceFormat};
use edrp_core::milp::{
    build_model, default_l_max, export_model, required_l_max, Alphas, Assignment, EnumerationConfig, ModelFormat,
};
use edrp_core::spatial::DbscanParams;
use edrp_core::{check_solution, enumerate_optimal, plan_to_assignment, simulate_plan, FleetPlan, Instance};
use serde_json::json;
use std::io::{ErrorKind, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// `println!` that returns write errors instead of panicking, so a closed
/// pipe ends the program quietly.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)?
    };
}

#[derive(Parser)]
#[command(
    name = "edrp",
    version,
    about = "EV delivery routing with charging: planners, exact model, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file.
    #[arg(long)]
    instance: PathBuf,
    /// `native` JSON or `jd` delimited text.
    #[arg(long, default_value = "native")]
    format: InstanceFormat,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance> {
        load_instance(&self.instance, self.format).with_context(|| format!("loading {}", self.instance.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance as native JSON.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        deliveries: usize,
        #[arg(long, default_value_t = 5)]
        cps: usize,
        #[arg(long, default_value_t = 4)]
        evs: usize,
        /// Generator settings (JSON); missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a planner and report its simulated metrics.
    Solve {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value = "csa")]
        method: Method,
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// EDF ordering: `start` or `deadline`.
        #[arg(long, default_value = "start")]
        edf_order: String,
        /// Clustering radius in distance units (CSA).
        #[arg(long)]
        eps_spatial: Option<f64>,
        /// Clustering radius in minutes (CSA).
        #[arg(long)]
        eps_temporal: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
    },
    /// Replay a saved plan through the simulator.
    Simulate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Export the exact model in LP or MPS form (chosen by extension unless
    /// `--model-format` is given).
    ExportMilp {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        lmax: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model_format: Option<ModelFormat>,
    },
    /// Check a solution against every model constraint. Accepts an
    /// assignment (`name value` lines) or a plan JSON, which is translated
    /// first. Exits with status 1 when infeasible.
    Check {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        lmax: Option<usize>,
        #[arg(long, default_value_t = edrp_core::milp::DEFAULT_TOL)]
        tol: f64,
    },
    /// Exact optimum by enumeration on small instances.
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        plan_out: Option<PathBuf>,
        /// Also write the optimal assignment.
        #[arg(long)]
        solution_out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write CSV metrics.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Named sweep: small, oracle, scaling, ratio, cps.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    sweep: Option<Sweep>,
    /// `a..b:step` or a comma list.
    #[arg(long)]
    values: Option<String>,
    #[arg(long)]
    deliveries: Option<usize>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    cps: Option<usize>,
    /// Comma list of csa, edf, ndf, oracle.
    #[arg(long)]
    methods: Option<String>,
    /// Number of seeds, starting at `--seed-start`.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_start: u64,
    /// Timed repetitions per cell (median reported).
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_values(s: &str) -> Result<Vec<f64>> {
    if let Some((range, step)) = s.split_once(':') {
        let (a, b) = range.split_once("..").context("range must look like a..b:step")?;
        let (a, b, step): (f64, f64, f64) = (a.trim().parse()?, b.trim().parse()?, step.trim().parse()?);
        if step.is_nan() || step <= 0.0 || b < a {
            bail!("range {s:?} needs a <= b and step > 0");
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + step * i as f64).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad value {v:?}")))
        .collect()
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .map(|m| m.parse::<Method>().map_err(anyhow::Error::msg))
        .collect()
}

fn bench_config(a: &BenchArgs) -> Result<ExperimentConfig> {
    let seeds: Vec<u64> = (a.seed_start..a.seed_start + a.seeds).collect();
    let mut cfg = match &a.preset {
        Some(name) => bench::preset(name, seeds)
            .with_context(|| format!("unknown preset {name:?}; known: {}", bench::PRESETS.join(", ")))?,
        None => {
            let sweep = a.sweep.context("--sweep or --preset is required")?;
            let values = parse_values(a.values.as_deref().context("--values is required without --preset")?)?;
            ExperimentConfig::new(
                sweep,
                values,
                Point {
                    deliveries: 200,
                    ratio: 5.0,
                    cps: 5,
                },
                seeds,
                vec![Method::Csa, Method::Edf, Method::Ndf],
            )
        }
    };
    if let Some(s) = a.sweep {
        cfg.sweep = s;
    }
    if let Some(v) = &a.values {
        cfg.values = parse_values(v)?;
    }
    if let Some(d) = a.deliveries {
        cfg.fixed.deliveries = d;
    }
    if let Some(r) = a.ratio {
        cfg.fixed.ratio = r;
    }
    if let Some(c) = a.cps {
        cfg.fixed.cps = c;
    }
    if let Some(m) = &a.methods {
        cfg.methods = parse_methods(m)?;
    }
    cfg.repeats = a.repeats;
    cfg.output_dir = Some(a.out.clone());
    Ok(cfg)
}

fn plan_summary(inst: &Instance, plan: &FleetPlan) -> Result<serde_json::Value> {
    let sim = simulate_plan(inst, plan)?;
    let alphas = Alphas::default_for(inst);
    Ok(json!({
        "feasible": sim.feasible,
        "served": sim.served_count,
        "deliveries": inst.deliveries().len(),
        "total_cost": sim.total_cost,
        "avg_cost_per_served": sim.cost_per_served,
        "objective": sim.objective(alphas.alpha1, alphas.alpha2),
        "makespan": sim.makespan,
        "total_distance": sim.total_distance,
        "violations": sim.violations,
    }))
}

fn load_solution(inst: &Instance, path: &Path, lmax: Option<usize>) -> Result<(usize, Assignment)> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let plan = FleetPlan::load(inst, path)?;
        let l = lmax.unwrap_or_else(|| default_l_max(inst).max(required_l_max(&plan)));
        Ok((l, plan_to_assignment(inst, &plan, l)?))
    } else {
        Ok((lmax.unwrap_or_else(|| default_l_max(inst)), Assignment::load(path)?))
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate {
            seed,
            deliveries,
            cps,
            evs,
            config,
            out,
        } => {
            let cfg: GeneratorConfig = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => GeneratorConfig::default(),
            };
            let inst = generate_synthetic(seed, deliveries, cps, evs, &cfg)?;
            save_instance(&inst, &out)?;
            out!("wrote {}", out.display());
        }
        Command::Solve {
            instance,
            method,
            plan_out,
            edf_order,
            eps_spatial,
            eps_temporal,
            min_pts,
        } => {
            let inst = instance.load()?;
            let plan = match method {
                Method::Csa => {
                    let mut p = DbscanParams::defaults_for(&inst);
                    p.eps_spatial = eps_spatial.unwrap_or(p.eps_spatial);
                    p.eps_temporal = eps_temporal.unwrap_or(p.eps_temporal);
                    p.min_pts = min_pts.unwrap_or(p.min_pts);
                    csa_plan(&inst, &p, None)?
                }
                Method::Edf => {
                    let order = match edf_order.as_str() {
                        "start" => EdfOrder::Start,
                        "deadline" => EdfOrder::Deadline,
                        other => bail!("unknown EDF order {other:?} (expected start or deadline)"),
                    };
                    edf_plan_with(&inst, order)
                }
                Method::Ndf => ndf_plan(&inst),
                Method::Oracle => enumerate_optimal(&inst, &EnumerationConfig::default())?.plan,
            };
            if let Some(p) = plan_out {
                plan.save(&inst, &p)?;
            }
            out!("{}", serde_json::to_string_pretty(&plan_summary(&inst, &plan)?)?);
        }
        Command::Simulate { instance, plan } => {
            let inst = instance.load()?;
            let plan = FleetPlan::load(&inst, &plan)?;
            let summary = plan_summary(&inst, &plan)?;
            out!("{}", serde_json::to_string_pretty(&summary)?);
            if summary["feasible"] != json!(true) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ExportMilp {
            instance,
            lmax,
            out,
            model_format,
        } => {
            let inst = instance.load()?;
            let l = lmax.unwrap_or_else(|| default_l_max(&inst));
            let model = build_model(&inst, l, Alphas::default_for(&inst))?;
            let format = model_format.unwrap_or_else(|| ModelFormat::from_path(&out));
            export_model(&model, &out, format)?;
            out!(
                "wrote {} ({} variables, {} constraints, l_max {})",
                out.display(),
                model.variables.len(),
                model.constraints.len(),
                l
            );
        }
        Command::Check {
            instance,
            solution,
            lmax,
            tol,
        } => {
            let inst = instance.load()?;
            let (l, assignment) = load_solution(&inst, &solution, lmax)?;
            let model = build_model(&inst, l, Alphas::default_for(&inst))?;
            let report = check_solution(&model, &assignment, tol)?;
            out!("{}", serde_json::to_string_pretty(&report)?);
            if !report.feasible {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Oracle {
            instance,
            plan_out,
            solution_out,
        } => {
            let inst = instance.load()?;
            let res = enumerate_optimal(&inst, &EnumerationConfig::default())?;
            if let Some(p) = plan_out {
                res.plan.save(&inst, &p)?;
            }
            if let Some(p) = solution_out {
                std::fs::write(&p, res.assignment.to_text(&res.model))?;
            }
            let mut summary = plan_summary(&inst, &res.plan)?;
            summary["objective"] = json!(res.report.objective_value);
            out!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Bench(args) => {
            let cfg = bench_config(&args)?;
            let rows = bench::run_experiment(&cfg)?;
            let summary = bench::write_outputs(&args.out, &rows, cfg.sweep)?;
            for s in &summary {
                let red = |r: Option<f64>| r.map(|x| format!("{:+.1}%", 100.0 * x)).unwrap_or_default();
                out!(
                    "{}={:<6} {:<6} served {:>7.2} ± {:<6.2} cost/del {:.4} ± {:.4}  {:>9.3} ms  {} {}",
                    s.sweep.name(),
                    s.value,
                    s.method,
                    s.served_mean,
                    s.served_std,
                    s.avg_cost_mean,
                    s.avg_cost_std,
                    s.elapsed_ms_mean,
                    red(s.reduction_vs_edf),
                    red(s.reduction_vs_ndf),
                );
            }
            out!("wrote {} rows to {}", rows.len(), args.out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_ranges() {
        assert_eq!(parse_values("25..200:25").unwrap().len(), 8);
        assert_eq!(parse_values("5, 10,15").unwrap(), vec![5.0, 10.0, 15.0]);
        assert!(parse_values("10..5:1").is_err());
        assert!(parse_values("x").is_err());
    }

    #[test]
    fn methods_list() {
        assert_eq!(parse_methods("csa,ndf").unwrap(), vec![Method::Csa, Method::Ndf]);
        assert!(parse_methods("csa,foo").is_err());
    }
}
