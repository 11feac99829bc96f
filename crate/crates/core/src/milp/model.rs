use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("l_max must be at least 1")]
    ZeroLmax,
    #[error("non-finite model parameter: {0}")]
    NonFinite(String),
    #[error("assignment is missing variable {0}")]
    MissingVariable(String),
    #[error("plan cannot be represented in the model: {0}")]
    NotRepresentable(String),
    #[error("EV {ev_id} needs {needed} subtrips but l_max is {l_max}")]
    TooManySubtrips { ev_id: u32, needed: usize, l_max: usize },
    #[error("delivery {0} is visited more than once")]
    DeliveryRepeated(u32),
    #[error("enumeration limits exceeded: {0}")]
    LimitsExceeded(String),
    #[error("cannot parse solution: {0}")]
    Parse(String),
    #[error("cannot access {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    /// `f64::INFINITY` when unbounded above.
    pub upper: f64,
    /// Constraint family that the bounds realize.
    pub bound_tag: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// Sparse linear expression over variable indices. Duplicate indices are
/// merged and zero coefficients dropped on construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn from_terms(raw: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut pos: HashMap<usize, usize> = HashMap::new();
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (v, c) in raw {
            match pos.get(&v) {
                Some(&p) => terms[p].1 += c,
                None => {
                    pos.insert(v, terms.len());
                    terms.push((v, c));
                }
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        Self { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Family plus indices, e.g. `C11[1,2,d1,d3]`.
    pub tag: String,
    pub family: &'static str,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphas {
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Full model; the objective is maximized.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: LinExpr,
    /// Time-side Big-M.
    pub big_m: f64,
    /// Counting-side Big-M.
    pub big_m_count: f64,
    pub alphas: Alphas,
    pub l_max: usize,
    /// (λ variable, unit cost) pairs making up the charging cost.
    pub cost_terms: Vec<(usize, f64)>,
    /// Arc variables entering delivery nodes.
    pub delivery_arcs: Vec<usize>,
    pub(crate) index: HashMap<String, usize>,
}

impl MilpModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn family_count(&self, family: &str) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn families(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for c in &self.constraints {
            *m.entry(c.family).or_insert(0) += 1;
        }
        m
    }
}

/// Values for model variables, by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    pub values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn zeros(model: &MilpModel) -> Self {
        Self {
            values: model.variables.iter().map(|v| (v.name.clone(), 0.0)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    /// Dense vector in model order; fails on the first missing variable.
    pub fn to_vector(&self, model: &MilpModel) -> Result<Vec<f64>, MilpError> {
        model
            .variables
            .iter()
            .map(|v| {
                self.get(&v.name)
                    .ok_or_else(|| MilpError::MissingVariable(v.name.clone()))
            })
            .collect()
    }

    /// `name value` lines in model order.
    pub fn to_text(&self, model: &MilpModel) -> String {
        let mut s = String::new();
        for v in &model.variables {
            if let Some(x) = self.get(&v.name) {
                s.push_str(&format!("{} {}\n", v.name, x));
            }
        }
        s
    }

    /// Parses `name value` lines. Blank lines and `#` comments are skipped;
    /// extra columns after the value are ignored.
    pub fn from_text(text: &str) -> Result<Self, MilpError> {
        let mut a = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(name), Some(val)) = (it.next(), it.next()) else {
                return Err(MilpError::Parse(format!("line {}: expected `name value`", no + 1)));
            };
            let v: f64 = val
                .parse()
                .map_err(|_| MilpError::Parse(format!("line {}: bad number {val:?}", no + 1)))?;
            a.set(name, v);
        }
        Ok(a)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, MilpError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MilpError::Io(path.display().to_string(), e))?;
        Self::from_text(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintViolation {
    pub tag: String,
    pub lhs: f64,
    pub sense: Sense,
    pub rhs: f64,
    /// Amount by which the row is violated (always > tol).
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub feasible: bool,
    pub violations: Vec<ConstraintViolation>,
    pub objective_value: f64,
    pub deliveries_served: f64,
    pub charging_cost: f64,
}

impl CheckReport {
    pub fn has_family(&self, family: &str) -> bool {
        self.violations.iter().any(|v| tag_family(&v.tag) == family)
    }
}

pub fn tag_family(tag: &str) -> &str {
    tag.split('[').next().unwrap_or(tag)
}
