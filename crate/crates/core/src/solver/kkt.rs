use crate::blocks::{BlockVector, PenaltySpec};
use crate::loss::LossModel;
use crate::penalty::k_value;

/// Largest violation of the optimality conditions of `f + lambda Phi` at `beta`.
///
/// Zero penalized blocks contribute `max(0, sqrt(K(lambda alpha xi, grad)) - lambda (1 - alpha) gamma)`;
/// nonzero blocks the sup-norm distance of `-grad` from the block subdifferential;
/// unpenalized blocks the sup-norm of the gradient.
pub fn kkt_residual<L: LossModel>(loss: &L, spec: &PenaltySpec, lambda: f64, beta: &BlockVector) -> f64 {
    let grad = loss.gradient(beta);
    kkt_from_gradient(spec, lambda, beta, grad.values(), None)
}

/// [`kkt_residual`] from a precomputed gradient, optionally restricted to active blocks.
pub fn kkt_from_gradient(
    spec: &PenaltySpec,
    lambda: f64,
    beta: &BlockVector,
    grad: &[f64],
    active: Option<&[bool]>,
) -> f64 {
    let structure = spec.structure();
    let mut worst = 0.0f64;
    for j in 0..structure.num_blocks() {
        if active.is_some_and(|a| !a[j]) {
            continue;
        }
        let g = &grad[structure.range(j)];
        let violation = if spec.is_unpenalized(j) {
            sup_norm(g)
        } else if !beta.is_block_nonzero(j) {
            let v = spec.l1_thresholds(lambda, j);
            (k_value(&v, g).sqrt() - spec.group_threshold(lambda, j)).max(0.0)
        } else {
            let b = beta.block(j);
            let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            let group = spec.group_threshold(lambda, j);
            let l1 = spec.l1_thresholds(lambda, j);
            b.iter()
                .zip(g)
                .zip(&l1)
                .map(|((&bi, &gi), &w)| {
                    let u = gi + group * bi / norm;
                    if bi != 0.0 {
                        (u + w * bi.signum()).abs()
                    } else {
                        (u.abs() - w).max(0.0)
                    }
                })
                .fold(0.0, f64::max)
        };
        worst = worst.max(violation);
    }
    worst
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockStructure;
    use crate::loss::QuadraticLoss;
    use nalgebra::DMatrix;

    #[test]
    fn lasso_closed_form_is_stationary() {
        let s = BlockStructure::new(vec![2, 1]).unwrap();
        let spec = PenaltySpec::new(&s, 1.0, vec![1.0, 1.0], vec![1.0; 3]).unwrap();
        let b = vec![-2.0, 0.3, 1.5];
        let loss = QuadraticLoss::new(&s, DMatrix::identity(3, 3), b.clone()).unwrap();
        let lambda = 0.7;
        let sol: Vec<f64> = b
            .iter()
            .map(|&bi| {
                let z = -bi;
                if z.abs() <= lambda {
                    0.0
                } else {
                    z - z.signum() * lambda
                }
            })
            .collect();
        let beta = BlockVector::from_values(&s, sol).unwrap();
        assert!(kkt_residual(&loss, &spec, lambda, &beta) < 1e-10);
        let off = BlockVector::from_values(&s, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(kkt_residual(&loss, &spec, lambda, &off) > 0.1);
    }

    #[test]
    fn zero_is_stationary_above_lambda_max() {
        let s = BlockStructure::new(vec![2]).unwrap();
        let spec = PenaltySpec::new(&s, 0.0, vec![1.0], vec![1.0; 2]).unwrap();
        let loss = QuadraticLoss::new(&s, DMatrix::identity(2, 2), vec![3.0, 4.0]).unwrap();
        let zero = BlockVector::zeros(&s);
        assert_eq!(kkt_residual(&loss, &spec, 5.0, &zero), 0.0);
        assert!((kkt_residual(&loss, &spec, 4.0, &zero) - 1.0).abs() < 1e-12);
    }
}
