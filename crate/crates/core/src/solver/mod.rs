//! Path solver: an outer coordinate gradient descent loop with Armijo line
//! search, a middle block coordinate descent loop on the penalized quadratic
//! model, and an inner modified coordinate descent loop per block.

mod armijo;
mod config;
mod coordinate;
mod inner;
mod kkt;
mod middle;
mod outer;
mod path;

pub use armijo::{armijo_search, ArmijoStep};
pub use config::SolverConfig;
pub use coordinate::coordinate_min;
pub use inner::{inner_loop, BlockProblem, InnerStats};
pub use kkt::{kkt_from_gradient, kkt_residual};
pub use middle::{middle_loop, MiddleStats, QuadraticModel};
pub use outer::{objective, outer_step, OuterStep};
pub use path::{
    fit_path, fit_path_on_grid, lambda_grid, lambda_max_for, null_solution, solve_at_lambda, FitPath,
    LambdaDiagnostics, PathFailure, PathPoint,
};
