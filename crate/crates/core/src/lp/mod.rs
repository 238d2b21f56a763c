//! Linear programming with frozen-basis sensitivities.

mod dump;
mod problem;
mod sensitivity;
mod simplex;

pub use dump::to_lp_text;
pub use problem::{Basis, LpProblem, LpSolution, LpStatus, ParamTags, VarStatus};
pub use sensitivity::solution_sensitivity;
pub use simplex::{solve_lp, FEAS_TOL, OPT_TOL};
