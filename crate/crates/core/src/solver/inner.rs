//! Modified coordinate descent for a single block subproblem
//!
//!   min_x  x'g + x'Hx/2 + group ||x||_2 + sum_i l1_i |x_i|
//!
//! The group norm is not separable at zero, so plain coordinate descent can
//! stall there. When the iterate comes within `epsilon` of zero without a
//! negative objective, it is moved along the minimum-norm subgradient
//! direction at zero to a point with negative objective. Each sweep ends with
//! an exact line search along the ray through the iterate.

use nalgebra::DMatrix;

use crate::error::{Result, SglError};
use crate::penalty::kappa;

use super::coordinate::coordinate_min;
use super::SolverConfig;

/// One block subproblem; `group` and `l1` are already scaled by lambda.
#[derive(Debug, Clone, Copy)]
pub struct BlockProblem<'a> {
    pub gradient: &'a [f64],
    pub hessian: &'a DMatrix<f64>,
    pub group: f64,
    pub l1: &'a [f64],
}

impl BlockProblem<'_> {
    /// Objective value; zero at the origin.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let mut quad = 0.0;
        for j in 0..n {
            if x[j] == 0.0 {
                continue;
            }
            let col = self.hessian.column(j);
            let hx: f64 = (0..n).map(|i| col[i] * x[i]).sum();
            quad += x[j] * hx;
        }
        let lin: f64 = self.gradient.iter().zip(x).map(|(g, v)| g * v).sum();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l1: f64 = self.l1.iter().zip(x).map(|(w, v)| w * v.abs()).sum();
        lin + 0.5 * quad + self.group * norm + l1
    }

    /// Negated minimum-norm subgradient at zero: `-kappa(l1, g)`.
    pub fn descent_at_zero(&self) -> Vec<f64> {
        kappa(self.l1, self.gradient).into_iter().map(|v| -v).collect()
    }
}

/// Counters for the inner loop.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct InnerStats {
    pub sweeps: usize,
    pub escapes: usize,
}

/// Coordinatewise minimizer of `problem`, started from `start`.
///
/// Only called when zero is not optimal; `block` is used in error reports.
pub fn inner_loop(
    problem: &BlockProblem<'_>,
    start: &[f64],
    block: usize,
    config: &SolverConfig,
    stats: &mut InnerStats,
) -> Result<Vec<f64>> {
    let n = start.len();
    let h = problem.hessian;
    let g = problem.gradient;
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let epsilon = config.inner_epsilon * scale.max(f64::MIN_POSITIVE);

    let mut x = start.to_vec();
    let mut hx = mat_vec(h, &x);
    let mut norm_sq: f64 = x.iter().map(|v| v * v).sum();
    let mut previous = problem.objective(&x);

    for _ in 0..config.max_inner {
        stats.sweeps += 1;
        let escapes_before = stats.escapes;
        let mut max_change = 0.0f64;
        for j in 0..n {
            let hjj = h[(j, j)];
            let c = g[j] + hx[j] - hjj * x[j];
            let r = (norm_sq - x[j] * x[j]).max(0.0);
            let new = coordinate_min(c, hjj.max(0.0), problem.group, problem.l1[j], r);
            let d = new - x[j];
            if d != 0.0 {
                for (hv, hc) in hx.iter_mut().zip(h.column(j).iter()) {
                    *hv += hc * d;
                }
                x[j] = new;
                norm_sq = x.iter().map(|v| v * v).sum();
                max_change = max_change.max(d.abs());
            }

            if problem.group > 0.0 && norm_sq.sqrt() < epsilon && problem.objective(&x) >= 0.0 {
                let direction = problem.descent_at_zero();
                if direction.iter().all(|&v| v == 0.0) {
                    return Err(SglError::ZeroDirection(block));
                }
                let escaped = escape_from_zero(problem, &direction)
                    .ok_or(SglError::ZeroDirection(block))?;
                stats.escapes += 1;
                let d = escaped
                    .iter()
                    .zip(&x)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                max_change = max_change.max(d);
                x = escaped;
                hx = mat_vec(h, &x);
                norm_sq = x.iter().map(|v| v * v).sum();
            }
        }
        // Exact minimization along the ray through x. Near zero the group norm
        // couples the coordinates strongly and plain sweeps move the radius
        // very slowly. Kept only when it lowers the objective.
        if problem.group > 0.0 && norm_sq > 0.0 {
            let curvature: f64 = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
            let slope = g.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                + problem.group * norm_sq.sqrt()
                + problem.l1.iter().zip(&x).map(|(w, v)| w * v.abs()).sum::<f64>();
            let scale = -slope / curvature;
            if curvature > 0.0 && scale.is_finite() && scale > 0.0 && scale != 1.0 {
                let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
                if problem.objective(&scaled) < problem.objective(&x) {
                    let largest = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    max_change = max_change.max((scale - 1.0).abs() * largest);
                    x = scaled;
                    hx.iter_mut().for_each(|v| *v *= scale);
                    norm_sq *= scale * scale;
                }
            }
        }
        if max_change < config.tol_inner {
            return Ok(x);
        }
        // Sweeps are monotone in exact arithmetic; no decrease means only
        // rounding noise is left.
        let current = problem.objective(&x);
        if current >= previous && stats.escapes == escapes_before {
            return Ok(x);
        }
        previous = current;
    }
    Err(SglError::IterationCap {
        stage: "inner",
        cap: config.max_inner,
    })
}

// Halves t from 1 until the objective along the direction is negative.
fn escape_from_zero(problem: &BlockProblem<'_>, direction: &[f64]) -> Option<Vec<f64>> {
    let mut t = 1.0;
    for _ in 0..200 {
        let trial: Vec<f64> = direction.iter().map(|d| t * d).collect();
        if problem.objective(&trial) < 0.0 {
            return Some(trial);
        }
        t *= 0.5;
    }
    None
}

fn mat_vec(h: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (o, hc) in out.iter_mut().zip(h.column(j).iter()) {
                *o += hc * xj;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_lasso_is_one_sweep() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 4.0]));
        let g = [-3.0, 0.5, 6.0];
        let l1 = [1.0, 1.0, 1.0];
        let p = BlockProblem {
            gradient: &g,
            hessian: &h,
            group: 0.0,
            l1: &l1,
        };
        let mut stats = InnerStats::default();
        let x = inner_loop(&p, &[0.0; 3], 0, &SolverConfig::default(), &mut stats).unwrap();
        assert_eq!(x, vec![1.0, 0.0, -1.25]);
        // one moving sweep plus the confirming one
        assert_eq!(stats.sweeps, 2);
    }

    #[test]
    fn converged_start_does_not_move() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 4.0]));
        let g = [-3.0, 6.0];
        let l1 = [1.0, 1.0];
        let p = BlockProblem {
            gradient: &g,
            hessian: &h,
            group: 0.0,
            l1: &l1,
        };
        let mut stats = InnerStats::default();
        let x = inner_loop(&p, &[1.0, -1.25], 0, &SolverConfig::default(), &mut stats).unwrap();
        assert_eq!(x, vec![1.0, -1.25]);
        assert_eq!(stats.sweeps, 1);
    }

    #[test]
    fn escapes_from_zero() {
        // zero is coordinatewise optimal (|g_i| <= group) but not blockwise: ||g|| > group
        let h = DMatrix::identity(2, 2);
        let g = [-0.9, -0.9];
        let l1 = [0.0, 0.0];
        let p = BlockProblem {
            gradient: &g,
            hessian: &h,
            group: 1.0,
            l1: &l1,
        };
        let mut stats = InnerStats::default();
        let x = inner_loop(&p, &[0.0, 0.0], 0, &SolverConfig::default(), &mut stats).unwrap();
        assert!(stats.escapes >= 1);
        assert!(p.objective(&x) < 0.0);
        // analytic: x = (1 - 1/||g||) (-g)
        let norm = (0.81f64 * 2.0).sqrt();
        let expect = (1.0 - 1.0 / norm) * 0.9;
        assert!((x[0] - expect).abs() < 1e-7 && (x[1] - expect).abs() < 1e-7, "{x:?}");
    }

    #[test]
    fn descent_at_zero_example() {
        let h = DMatrix::identity(2, 2);
        let g = [3.0, -1.0];
        let l1 = [1.0, 2.0];
        let p = BlockProblem {
            gradient: &g,
            hessian: &h,
            group: 0.5,
            l1: &l1,
        };
        assert_eq!(p.descent_at_zero(), vec![-2.0, 0.0]);
    }

    #[test]
    fn vanishing_direction_is_an_error() {
        let h = DMatrix::identity(2, 2);
        let g = [0.5, -0.5];
        let l1 = [1.0, 1.0];
        let p = BlockProblem {
            gradient: &g,
            hessian: &h,
            group: 1.0,
            l1: &l1,
        };
        let mut stats = InnerStats::default();
        let err = inner_loop(&p, &[0.0, 0.0], 3, &SolverConfig::default(), &mut stats).unwrap_err();
        assert_eq!(err, SglError::ZeroDirection(3));
    }
}
