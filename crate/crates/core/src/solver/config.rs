use crate::error::{Result, SglError};

/// Solver parameters.
///
/// Tolerances: the outer loop stops when the KKT residual falls below
/// `tol_outer` times the sup-norm of the gradient at the warm start, or when
/// the relative objective change drops below `tol_objective`. The middle loop
/// stops when no block moved by more than `tol_middle` (sup-norm) in a sweep,
/// the inner loop when no coordinate moved by more than `tol_inner` or a sweep
/// failed to lower the block objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Sufficient-decrease fraction of the Armijo rule, in (0, 0.5).
    pub armijo_a: f64,
    /// Step shrink factor of the Armijo rule, in (0, 1).
    pub armijo_b: f64,
    /// Smallest Armijo step before the outer loop reports a stall.
    pub armijo_min_step: f64,
    /// Escape radius of the inner loop, relative to the block gradient sup-norm.
    pub inner_epsilon: f64,
    pub tol_outer: f64,
    pub tol_objective: f64,
    pub tol_middle: f64,
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_middle: usize,
    pub max_inner: usize,
    /// Skip block-gradient computations for zero blocks via the Hessian bound.
    pub use_hessian_bound: bool,
    /// Replace the Hessian by its diagonal in the quadratic model.
    pub use_diagonal_hessian: bool,
    /// Recompute the full zero test for every screened block and count disagreements.
    pub verify_screening: bool,
    /// Smallest lambda of the default grid, relative to lambda max.
    pub lambda_min_ratio: f64,
    /// Number of grid points.
    pub n_lambda: usize,
    /// Explicit lambda grid; replaces the default log grid when set.
    pub lambdas: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            armijo_a: 0.1,
            armijo_b: 0.5,
            armijo_min_step: 1e-14,
            inner_epsilon: 1e-4,
            tol_outer: 1e-5,
            tol_objective: 1e-10,
            tol_middle: 1e-7,
            tol_inner: 1e-9,
            max_outer: 500,
            max_middle: 20_000,
            max_inner: 20_000,
            use_hessian_bound: true,
            use_diagonal_hessian: false,
            verify_screening: false,
            lambda_min_ratio: 1e-4,
            n_lambda: 100,
            lambdas: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SglError::InvalidParameter(msg.to_string()));
        if !(self.armijo_a > 0.0 && self.armijo_a < 0.5) {
            return bad("armijo_a must lie in (0, 0.5)");
        }
        if !(self.armijo_b > 0.0 && self.armijo_b < 1.0) {
            return bad("armijo_b must lie in (0, 1)");
        }
        let tols = [
            self.armijo_min_step,
            self.inner_epsilon,
            self.tol_outer,
            self.tol_objective,
            self.tol_middle,
            self.tol_inner,
        ];
        if tols.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("tolerances must be positive");
        }
        if self.max_outer == 0 || self.max_middle == 0 || self.max_inner == 0 {
            return bad("iteration caps must be positive");
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio <= 1.0) {
            return bad("lambda_min_ratio must lie in (0, 1]");
        }
        if self.n_lambda == 0 {
            return bad("n_lambda must be positive");
        }
        if let Some(grid) = &self.lambdas {
            if grid.is_empty() || grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                return bad("lambda grid must be nonempty and positive");
            }
            if grid.windows(2).any(|w| w[1] >= w[0]) {
                return bad("lambda grid must be strictly decreasing");
            }
        }
        Ok(())
    }
}
