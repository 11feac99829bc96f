use super::model::{LinExpr, MilpError, MilpModel, Sense, VarKind};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Lp,
    Mps,
}

impl FromStr for ModelFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "lp-text" => Ok(Self::Lp),
            "mps" | "mps-text" => Ok(Self::Mps),
            other => Err(format!("unknown model format {other:?} (expected lp or mps)")),
        }
    }
}

impl ModelFormat {
    /// Guess from a file extension, defaulting to LP.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("mps") => Self::Mps,
            _ => Self::Lp,
        }
    }
}

/// Row name used in exported files: the tag with brackets turned into
/// parentheses, which both formats accept.
pub fn row_name(tag: &str) -> String {
    tag.replace('[', "(").replace(']', ")")
}

const WRAP: usize = 100;

fn push_terms(out: &mut String, line: &mut String, expr: &LinExpr, names: &[String]) {
    for &(v, c) in &expr.terms {
        let term = if c < 0.0 {
            format!(" - {} {}", -c, names[v])
        } else {
            format!(" + {} {}", c, names[v])
        };
        if line.len() + term.len() > WRAP {
            out.push_str(line);
            out.push('\n');
            line.clear();
            line.push_str("   ");
        }
        line.push_str(&term);
    }
}

/// CPLEX LP text.
pub fn to_lp(model: &MilpModel) -> String {
    let names: Vec<String> = model.variables.iter().map(|v| v.name.clone()).collect();
    let mut out = String::new();
    out.push_str("\\ EV delivery routing and charging model\n");
    let _ = writeln!(
        out,
        "\\ l_max = {}, big_m = {}, alpha1 = {}, alpha2 = {}",
        model.l_max, model.big_m, model.alphas.alpha1, model.alphas.alpha2
    );
    out.push_str("Maximize\n");
    let mut line = String::from(" obj:");
    if model.objective.terms.is_empty() {
        line.push_str(" 0 ");
        line.push_str(&names[0]);
    }
    push_terms(&mut out, &mut line, &model.objective, &names);
    out.push_str(&line);
    out.push('\n');

    out.push_str("Subject To\n");
    for c in &model.constraints {
        let mut line = format!(" {}:", row_name(&c.tag));
        if c.expr.terms.is_empty() {
            line.push_str(" 0 ");
            line.push_str(&names[0]);
        }
        push_terms(&mut out, &mut line, &c.expr, &names);
        let tail = format!(" {} {}", c.sense, c.rhs);
        if line.len() + tail.len() > WRAP {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&tail);
        out.push_str(&line);
        out.push('\n');
    }

    out.push_str("Bounds\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Continuous) {
        if v.upper.is_infinite() {
            let _ = writeln!(out, " {} >= {}", v.name, v.lower);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
    }
    out.push_str("Binaries\n");
    for v in model.variables.iter().filter(|v| v.kind == VarKind::Binary) {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

/// Free-format MPS text with an `OBJSENSE MAX` section.
pub fn to_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("NAME edrp\nOBJSENSE\n    MAX\nROWS\n N obj\n");
    let rows: Vec<String> = model.constraints.iter().map(|c| row_name(&c.tag)).collect();
    for (c, name) in model.constraints.iter().zip(&rows) {
        let s = match c.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        let _ = writeln!(out, " {s} {name}");
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.variables.len()];
    let mut obj = vec![0.0; model.variables.len()];
    for &(v, c) in &model.objective.terms {
        obj[v] = c;
    }
    for (r, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.expr.terms {
            cols[v].push((r, a));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (v, var) in model.variables.iter().enumerate() {
        let is_bin = var.kind == VarKind::Binary;
        if is_bin != in_int {
            let kind = if is_bin { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, " MARKER{marker} 'MARKER' '{kind}'");
            marker += 1;
            in_int = is_bin;
        }
        if obj[v] != 0.0 {
            let _ = writeln!(out, " {} obj {}", var.name, obj[v]);
        }
        for &(r, a) in &cols[v] {
            let _ = writeln!(out, " {} {} {}", var.name, rows[r], a);
        }
        if obj[v] == 0.0 && cols[v].is_empty() {
            let _ = writeln!(out, " {} obj 0", var.name);
        }
    }
    if in_int {
        let _ = writeln!(out, " MARKER{marker} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    for (c, name) in model.constraints.iter().zip(&rows) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", name, c.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for v in &model.variables {
        if v.kind == VarKind::Binary {
            let _ = writeln!(out, " BV BND {}", v.name);
            continue;
        }
        if v.lower != 0.0 {
            let _ = writeln!(out, " LO BND {} {}", v.name, v.lower);
        }
        if v.upper.is_finite() {
            let _ = writeln!(out, " UP BND {} {}", v.name, v.upper);
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn export_model(model: &MilpModel, path: impl AsRef<Path>, format: ModelFormat) -> Result<(), MilpError> {
    let path = path.as_ref();
    let text = match format {
        ModelFormat::Lp => to_lp(model),
        ModelFormat::Mps => to_mps(model),
    };
    std::fs::write(path, text).map_err(|e| MilpError::Io(path.display().to_string(), e))
}
