//! Small mixed-integer linear programming toolkit: sparse models, exact
//! McCormick envelopes, a bounded dual simplex, best-first branch-and-bound
//! and free-format MPS export.

mod bnb;
mod error;
mod lp;
mod mccormick;
mod model;
mod mps;

pub use bnb::{relative_gap, solve_milp, MilpOptions, SolveReport, SolveStatus};
pub use error::{LpError, ModelError, MpsError};
pub use lp::{solve_lp, solve_lp_with, LpOptions, LpSolution, LpStatus};
pub use mccormick::add_mccormick;
pub use model::{Integrality, LinearConstraint, MilpModel, Sense, VarId, Variable};
pub use mps::{export_mps, export_mps_with, sanitize_name, MpsOptions};
