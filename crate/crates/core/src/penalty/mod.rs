//! Distance majorization of penalized objectives.
//!
//! For a loss `l` and convex sets `C_i` with weights `gamma_i` summing to one,
//! the penalized objective
//!
//! ```text
//! f_mu(x) = l(x) + mu/2 sum_i gamma_i dist(x, C_i)^2
//! ```
//!
//! is majorized at `x_n` by replacing each `dist(x, C_i)^2` with
//! `||x - P_i(x_n)||^2`. Because the weights sum to one, minimizing the
//! surrogate is a proximal step of `l` at the weighted mean of the
//! projections. [`solve`] runs these steps at each penalty of an increasing
//! schedule until the relative step falls below `rho`.

mod feasibility;
mod loss;
mod problem;
mod solver;
mod trace;

pub use feasibility::{feasibility_solve, FeasibilityConfig, FeasibilityOutcome};
pub use loss::{SmoothLoss, SquaredDistance, WeightedSquaredDistance, ZeroLoss};
pub use problem::{minimize_surrogate, mm_step, stationarity_residual, PenaltyProblem, ViolationFn};
pub use solver::{solve, Evaluation, MuSchedule, PenalizedModel, Solution, SolverConfig, Violation};
pub use trace::{SolveTrace, TraceRecord};
