//! EV delivery route planning with charging decisions.
//!
//! Modules:
//! - [`instance`]: problem types, validation, file formats, synthetic generation.
//! - [`spatial`]: normalized K-D tree over charging locations, ST-DBSCAN.
//! - [`heuristics`]: plan simulator and the CSA, EDF and NDF planners.
//! - [`milp`]: exact model builder, LP/MPS export, solution checker, enumeration oracle.
//! - [`bench`]: experiment sweeps, metrics and summary tables.

pub mod bench;
pub mod heuristics;
pub mod instance;
pub mod milp;
pub mod spatial;

pub use heuristics::{csa_plan, edf_plan, ndf_plan, simulate_plan, FleetPlan, SimulationReport};
pub use instance::{Instance, Node};
pub use milp::{build_model, check_solution, enumerate_optimal, plan_to_assignment, Assignment, MilpModel};
