use super::model::{Assignment, CheckReport, ConstraintViolation, MilpError, MilpModel, Sense, VarKind};

pub const DEFAULT_TOL: f64 = 1e-6;

/// Evaluates every row, bound and integrality requirement at `assignment`.
///
/// Bound violations are reported under the family the bound realizes (for
/// example `C12[u_d1_1_1,lb]`); integrality failures as `BIN[name]`.
pub fn check_solution(model: &MilpModel, assignment: &Assignment, tol: f64) -> Result<CheckReport, MilpError> {
    let x = assignment.to_vector(model)?;
    let mut violations = Vec::new();

    for c in &model.constraints {
        let lhs = c.expr.eval(&x);
        let excess = match c.sense {
            Sense::Le => lhs - c.rhs,
            Sense::Ge => c.rhs - lhs,
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        if excess > tol {
            violations.push(ConstraintViolation {
                tag: c.tag.clone(),
                lhs,
                sense: c.sense,
                rhs: c.rhs,
                slack: excess,
            });
        }
    }

    for (v, &val) in model.variables.iter().zip(&x) {
        if val < v.lower - tol {
            violations.push(ConstraintViolation {
                tag: format!("{}[{},lb]", v.bound_tag, v.name),
                lhs: val,
                sense: Sense::Ge,
                rhs: v.lower,
                slack: v.lower - val,
            });
        }
        if val > v.upper + tol {
            violations.push(ConstraintViolation {
                tag: format!("{}[{},ub]", v.bound_tag, v.name),
                lhs: val,
                sense: Sense::Le,
                rhs: v.upper,
                slack: val - v.upper,
            });
        }
        if v.kind == VarKind::Binary {
            let off = (val - val.round()).abs();
            if off > tol {
                violations.push(ConstraintViolation {
                    tag: format!("BIN[{}]", v.name),
                    lhs: val,
                    sense: Sense::Eq,
                    rhs: val.round(),
                    slack: off,
                });
            }
        }
    }

    Ok(CheckReport {
        feasible: violations.is_empty(),
        violations,
        objective_value: model.objective.eval(&x),
        deliveries_served: model.delivery_arcs.iter().map(|&v| x[v]).sum(),
        charging_cost: model.cost_terms.iter().map(|&(v, theta)| x[v] * theta).sum(),
    })
}
