use crate::blocks::{BlockVector, PenaltySpec};
use crate::error::{Result, SglError};
use crate::loss::{Expansion, LossModel};

use super::armijo::armijo_search;
use super::kkt::kkt_from_gradient;
use super::middle::{middle_loop, MiddleStats, QuadraticModel};
use super::SolverConfig;

/// `f(beta) + lambda Phi(beta)`.
pub fn objective<L: LossModel>(loss: &L, spec: &PenaltySpec, lambda: f64, beta: &BlockVector) -> f64 {
    loss.value(beta) + lambda * spec.phi(beta).expect("dimensions checked at construction")
}

/// Result of one outer iteration.
#[derive(Debug, Clone)]
pub struct OuterStep {
    pub beta: BlockVector,
    pub objective: f64,
    /// Objective at the input point.
    pub start_objective: f64,
    pub step: f64,
    /// Predicted decrease of the Armijo rule (zero when no step was taken).
    pub predicted_decrease: f64,
    /// KKT residual at the input point.
    pub kkt: f64,
    /// No step taken: the input already met the KKT tolerance or no descent direction exists.
    pub stationary: bool,
    pub middle: MiddleStats,
}

/// One coordinate gradient descent iteration at `beta`: solve the penalized
/// quadratic model, then line-search along the difference.
///
/// Returns the input unchanged when its KKT residual is at most `kkt_tolerance`.
pub fn outer_step<L: LossModel>(
    loss: &L,
    spec: &PenaltySpec,
    lambda: f64,
    beta: &BlockVector,
    config: &SolverConfig,
    kkt_tolerance: f64,
    active: Option<&[bool]>,
) -> Result<OuterStep> {
    let expansion = loss.expand(beta, config.use_diagonal_hessian);
    let kkt = kkt_from_gradient(spec, lambda, beta, expansion.gradient(), active);
    let start_objective = objective(loss, spec, lambda, beta);
    let unchanged = |middle| OuterStep {
        beta: beta.clone(),
        objective: start_objective,
        start_objective,
        step: 0.0,
        predicted_decrease: 0.0,
        kkt,
        stationary: true,
        middle,
    };
    if kkt <= kkt_tolerance {
        return Ok(unchanged(MiddleStats::default()));
    }

    let mut model = QuadraticModel::new(expansion, beta.clone());
    let mut middle = MiddleStats::default();
    middle_loop(&mut model, spec, lambda, config, active, &mut middle)?;
    let q = model.q().to_vec();
    let target = model.into_iterate();

    let direction: Vec<f64> = target.values().iter().zip(beta.values()).map(|(a, b)| a - b).collect();
    if direction.iter().all(|&d| d == 0.0) {
        return Ok(unchanged(middle));
    }
    let linear: f64 = q.iter().zip(&direction).map(|(a, b)| a * b).sum();
    let phi_new = spec.phi(&target)?;
    let phi_old = spec.phi(beta)?;
    let delta = linear + lambda * (phi_new - phi_old);
    if delta >= 0.0 {
        return Ok(unchanged(middle));
    }

    let structure = beta.structure().clone();
    let eval = |v: &[f64]| {
        let b = BlockVector::from_values(&structure, v.to_vec()).unwrap();
        objective(loss, spec, lambda, &b)
    };
    let found = armijo_search(eval, beta.values(), &direction, delta, config).map_err(|e| match e {
        SglError::LineSearchStall { min_step, .. } => SglError::LineSearchStall { min_step, kkt },
        other => other,
    })?;
    let new_beta = if found.step == 1.0 {
        target
    } else {
        beta.add_scaled(found.step, &direction)
    };
    Ok(OuterStep {
        beta: new_beta,
        objective: found.value,
        start_objective,
        step: found.step,
        predicted_decrease: delta,
        kkt,
        stationary: false,
        middle,
    })
}
