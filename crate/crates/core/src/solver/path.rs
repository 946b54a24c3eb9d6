use crate::blocks::{BlockVector, PenaltySpec};
use crate::error::{Result, SglError};
use crate::loss::LossModel;
use crate::penalty::lambda_max;

use super::kkt::kkt_from_gradient;
use super::middle::MiddleStats;
use super::outer::{objective, outer_step};
use super::SolverConfig;

/// Work and convergence record for one lambda.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LambdaDiagnostics {
    pub outer_iterations: usize,
    /// Objective after each accepted outer step, starting with the warm start.
    pub objective_trace: Vec<f64>,
    pub backtracks: usize,
    pub middle: MiddleStats,
    pub converged: bool,
    pub stalled: bool,
}

/// Solution at one lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    /// Full parameter vector including unpenalized blocks.
    pub beta: BlockVector,
    pub objective: f64,
    pub kkt_residual: f64,
    pub diagnostics: LambdaDiagnostics,
}

impl PathPoint {
    /// Values of the unpenalized blocks, concatenated.
    pub fn intercept(&self, spec: &PenaltySpec) -> Vec<f64> {
        let s = spec.structure();
        (0..s.num_blocks())
            .filter(|&j| spec.is_unpenalized(j))
            .flat_map(|j| self.beta.block(j).iter().copied())
            .collect()
    }

    pub fn theta_hat(&self, spec: &PenaltySpec) -> usize {
        spec.theta_hat(&self.beta)
    }

    pub fn pi_hat(&self, spec: &PenaltySpec) -> usize {
        spec.pi_hat(&self.beta)
    }
}

/// Where and why a path stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub lambda_index: usize,
    pub error: SglError,
}

/// Warm-started solutions along a strictly decreasing lambda grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FitPath {
    pub lambda_max: f64,
    pub lambdas: Vec<f64>,
    /// One point per solved lambda; shorter than `lambdas` when `failure` is set.
    pub points: Vec<PathPoint>,
    pub failure: Option<PathFailure>,
}

impl FitPath {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Errors with the failure, if any.
    pub fn into_result(self) -> Result<Self> {
        match &self.failure {
            Some(f) => Err(f.error.clone()),
            None => Ok(self),
        }
    }

    pub fn theta_hats(&self, spec: &PenaltySpec) -> Vec<usize> {
        self.points.iter().map(|p| p.theta_hat(spec)).collect()
    }
}

/// `count` log-spaced values from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_grid(lambda_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lambda_max];
    }
    let step = ratio.ln() / (count - 1) as f64;
    (0..count)
        .map(|i| if i == 0 { lambda_max } else { lambda_max * (step * i as f64).exp() })
        .collect()
}

/// Penalized blocks at zero, unpenalized blocks at their optimum.
pub fn null_solution<L: LossModel>(loss: &L, spec: &PenaltySpec, config: &SolverConfig) -> Result<BlockVector> {
    if let Some(beta) = loss.optimize_intercept()? {
        return Ok(beta);
    }
    let structure = loss.structure();
    let zero = BlockVector::zeros(structure);
    let active: Vec<bool> = (0..structure.num_blocks()).map(|j| spec.is_unpenalized(j)).collect();
    if !active.iter().any(|&a| a) {
        return Ok(zero);
    }
    let (beta, _, err) = solve_at_lambda(loss, spec, 1.0, zero, config, Some(&active));
    match err {
        Some(e) => Err(e),
        None => Ok(beta),
    }
}

/// Lambda max of `spec` for `loss`, measured at [`null_solution`].
pub fn lambda_max_for<L: LossModel>(loss: &L, spec: &PenaltySpec, config: &SolverConfig) -> Result<f64> {
    let start = null_solution(loss, spec, config)?;
    lambda_max(spec, &loss.gradient(&start))
}

/// Fits the regularization path on the configured grid (explicit, or log-spaced from lambda max).
pub fn fit_path<L: LossModel>(loss: &L, spec: &PenaltySpec, config: &SolverConfig) -> Result<FitPath> {
    config.validate()?;
    let start = null_solution(loss, spec, config)?;
    let lmax = lambda_max(spec, &loss.gradient(&start))?;
    let grid = match &config.lambdas {
        Some(g) => g.clone(),
        None => lambda_grid(lmax, config.lambda_min_ratio, config.n_lambda),
    };
    Ok(run_path(loss, spec, config, start, lmax, grid))
}

/// Fits the path on a given grid, e.g. one derived from another data set.
pub fn fit_path_on_grid<L: LossModel>(
    loss: &L,
    spec: &PenaltySpec,
    config: &SolverConfig,
    grid: &[f64],
) -> Result<FitPath> {
    let config = SolverConfig {
        lambdas: Some(grid.to_vec()),
        ..config.clone()
    };
    config.validate()?;
    let start = null_solution(loss, spec, &config)?;
    let lmax = lambda_max(spec, &loss.gradient(&start))?;
    Ok(run_path(loss, spec, &config, start, lmax, grid.to_vec()))
}

fn run_path<L: LossModel>(
    loss: &L,
    spec: &PenaltySpec,
    config: &SolverConfig,
    start: BlockVector,
    lambda_max: f64,
    grid: Vec<f64>,
) -> FitPath {
    let mut points = Vec::with_capacity(grid.len());
    let mut failure = None;
    let mut warm = start;
    for (idx, &lambda) in grid.iter().enumerate() {
        let (beta, diagnostics, err) = solve_at_lambda(loss, spec, lambda, warm.clone(), config, None);
        if let Some(error) = err {
            failure = Some(PathFailure {
                lambda_index: idx,
                error,
            });
            break;
        }
        let grad = loss.gradient(&beta);
        let kkt = kkt_from_gradient(spec, lambda, &beta, grad.values(), None);
        points.push(PathPoint {
            lambda,
            objective: objective(loss, spec, lambda, &beta),
            kkt_residual: kkt,
            beta: beta.clone(),
            diagnostics,
        });
        warm = beta;
    }
    FitPath {
        lambda_max,
        lambdas: grid,
        points,
        failure,
    }
}

/// Outer loop at a single lambda. Returns the last iterate, its diagnostics
/// and the error that stopped it, if any. A line-search stall ends the loop
/// without an error and sets `stalled`.
pub fn solve_at_lambda<L: LossModel>(
    loss: &L,
    spec: &PenaltySpec,
    lambda: f64,
    start: BlockVector,
    config: &SolverConfig,
    active: Option<&[bool]>,
) -> (BlockVector, LambdaDiagnostics, Option<SglError>) {
    let mut diag = LambdaDiagnostics::default();
    let mut beta = start;
    let scale = {
        let g = loss.gradient(&beta);
        let s = spec.structure();
        (0..s.num_blocks())
            .filter(|&j| active.is_none_or(|a| a[j]))
            .flat_map(|j| g.block(j).iter().map(|v| v.abs()).collect::<Vec<_>>())
            .fold(0.0f64, f64::max)
    };
    let tolerance = config.tol_outer * scale.max(f64::MIN_POSITIVE);
    let mut current = objective(loss, spec, lambda, &beta);
    diag.objective_trace.push(current);

    for _ in 0..config.max_outer {
        let step = match outer_step(loss, spec, lambda, &beta, config, tolerance, active) {
            Ok(s) => s,
            Err(SglError::LineSearchStall { .. }) => {
                diag.stalled = true;
                return (beta, diag, None);
            }
            Err(e) => return (beta, diag, Some(e)),
        };
        diag.middle.accumulate(&step.middle);
        if step.stationary {
            diag.converged = true;
            return (beta, diag, None);
        }
        diag.outer_iterations += 1;
        if step.step < 1.0 {
            diag.backtracks += 1;
        }
        let previous = current;
        current = step.objective;
        beta = step.beta;
        diag.objective_trace.push(current);
        if (previous - current).abs() <= config.tol_objective * current.abs().max(1.0) {
            diag.converged = true;
            return (beta, diag, None);
        }
    }
    let err = SglError::IterationCap {
        stage: "outer",
        cap: config.max_outer,
    };
    (beta, diag, Some(err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockStructure;
    use crate::design::{Dataset, DesignMatrix};
    use crate::loss::{multinomial_penalty, MultinomialLoss, QuadraticLoss};
    use nalgebra::DMatrix;

    fn soft(z: f64, t: f64) -> f64 {
        z.signum() * (z.abs() - t).max(0.0)
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(2.0, 1e-2, 3);
        assert_eq!(g[0], 2.0);
        assert!((g[1] - 0.2).abs() < 1e-12);
        assert!((g[2] - 0.02).abs() < 1e-12);
        assert_eq!(lambda_grid(1.5, 0.1, 1), vec![1.5]);
    }

    #[test]
    fn lasso_path_matches_soft_thresholding() {
        let s = BlockStructure::new(vec![2, 3]).unwrap();
        let spec = PenaltySpec::new(&s, 1.0, vec![1.0, 1.0], vec![1.0; 5]).unwrap();
        let b = vec![1.0, -3.0, 0.5, 2.0, -0.1];
        let loss = QuadraticLoss::new(&s, DMatrix::identity(5, 5), b.clone()).unwrap();
        let config = SolverConfig {
            n_lambda: 8,
            lambda_min_ratio: 0.05,
            ..SolverConfig::default()
        };
        let path = fit_path(&loss, &spec, &config).unwrap().into_result().unwrap();
        assert_eq!(path.lambda_max, 3.0);
        for point in &path.points {
            for (i, &bi) in b.iter().enumerate() {
                assert!((point.beta.values()[i] - soft(-bi, point.lambda)).abs() < 1e-8);
            }
            assert!(point.kkt_residual < 1e-8);
        }
        assert_eq!(path.points[0].theta_hat(&spec), 0);
    }

    #[test]
    fn multinomial_path_decreases_objective_monotonically() {
        let rows = [
            [1.0, 0.2, -0.3],
            [0.9, -0.1, 0.4],
            [1.2, 0.3, 0.0],
            [-0.8, 1.0, 0.1],
            [-1.1, 0.7, -0.2],
            [-0.9, 1.3, 0.3],
            [0.1, -1.0, 1.1],
            [0.0, -0.9, 0.8],
            [0.2, -1.2, 1.0],
        ];
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let x = DesignMatrix::from_rows(9, 3, &flat).unwrap();
        let data = Dataset::new(x, vec![0, 0, 0, 1, 1, 1, 2, 2, 2], 3).unwrap();
        let loss = MultinomialLoss::new(&data);
        let spec = multinomial_penalty(3, 3, 0.5).unwrap();
        let config = SolverConfig {
            n_lambda: 15,
            lambda_min_ratio: 0.02,
            ..SolverConfig::default()
        };
        let path = fit_path(&loss, &spec, &config).unwrap().into_result().unwrap();
        assert_eq!(path.points.len(), 15);
        assert_eq!(path.points[0].theta_hat(&spec), 0);
        assert!(path.points.last().unwrap().theta_hat(&spec) > 0);
        for p in &path.points {
            for w in p.diagnostics.objective_trace.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
        let counts = [3.0f64, 3.0, 3.0];
        let icpt = path.points[0].intercept(&spec);
        let mean = icpt.iter().sum::<f64>() / 3.0;
        for (k, v) in icpt.iter().enumerate() {
            assert!((v - mean - (counts[k] / 9.0).ln() + (1.0f64 / 3.0).ln()).abs() < 1e-12);
        }
    }
}
