use crate::error::{Result, SglError};

use super::SolverConfig;

/// Accepted Armijo step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoStep {
    pub step: f64,
    pub value: f64,
    /// Objective at the start point.
    pub start_value: f64,
    pub trials: usize,
}

/// Largest `t` in `{1, b, b^2, ...}` with `F(x + t dir) <= F(x) + t a delta`.
///
/// `delta` is the predicted decrease `grad f(x)' dir + sum_i (h_i(x_i + dir_i) - h_i(x_i))`
/// and must be negative.
pub fn armijo_search(
    mut objective: impl FnMut(&[f64]) -> f64,
    x: &[f64],
    direction: &[f64],
    delta: f64,
    config: &SolverConfig,
) -> Result<ArmijoStep> {
    if !(delta < 0.0) {
        return Err(SglError::NotDescent(delta));
    }
    let start_value = objective(x);
    let mut trial = vec![0.0; x.len()];
    let mut t = 1.0;
    let mut trials = 0;
    while t >= config.armijo_min_step {
        trials += 1;
        for ((p, xi), di) in trial.iter_mut().zip(x).zip(direction) {
            *p = xi + t * di;
        }
        let value = objective(&trial);
        if value <= start_value + t * config.armijo_a * delta {
            return Ok(ArmijoStep {
                step: t,
                value,
                start_value,
                trials,
            });
        }
        t *= config.armijo_b;
    }
    Err(SglError::LineSearchStall {
        min_step: config.armijo_min_step,
        kkt: f64::NAN,
    })
}
