//! Exact model: builder, LP/MPS export, solution checker, plan translation
//! and a desk-scale enumeration oracle.
//!
//! Variable naming (labels: `d0` depot, `d1..` deliveries, `c1..` charging
//! points, `c0` the depot as a mid-day charging site; `j`, `l` from 1):
//!
//! | family | name | meaning |
//! |---|---|---|
//! | χ | `chi_x_y_j_l` | EV `j` drives x→y in subtrip `l` |
//! | Z | `z_j_l` | subtrip `l` of EV `j` is used |
//! | u | `u_x_j_l` | visit order of delivery x, in [2, \|D\|+1] |
//! | β | `beta_j_l` | energy spent in the subtrip |
//! | t | `tarr_y`, `tdep_y` | delivery arrival/departure |
//! | t̂ | `that_arr_y_j_l`, `that_dep_y_j_l` | charging-site arrival/departure |
//! | Ω | `omega_x_y_j_l` | χ · t_dep of delivery x |
//! | Ω̂ | `omhat_x_y_j_l` | χ · t̂_dep of site x |
//! | λ | `lam_x_y_j_l` | χ · β, for arcs into charging sites and the depot |

mod build;
mod check;
mod export;
mod model;
mod oracle;
mod translate;

pub use build::{
    beta_name, build_model, chi_name, default_l_max, lam_name, omega_name, omhat_name, tarr_name, tdep_name,
    that_arr_name, that_dep_name, time_big_m, u_name, z_name, Layout, ModelNode,
};
pub use check::{check_solution, DEFAULT_TOL};
pub use export::{export_model, row_name, to_lp, to_mps, ModelFormat};
pub use model::{
    tag_family, Alphas, Assignment, CheckReport, Constraint, ConstraintViolation, LinExpr, MilpError, MilpModel, Sense,
    VarKind, Variable,
};
pub use oracle::{enumerate_optimal, EnumerationConfig, OracleResult};
pub use translate::{plan_to_assignment, required_l_max};

#[cfg(test)]
mod tests;
