//! Block coordinate descent on the penalized quadratic model, with optional
//! Hessian-bound screening of zero blocks.

use crate::blocks::{BlockVector, PenaltySpec};
use crate::error::{Result, SglError};
use crate::loss::Expansion;
use crate::penalty::{block_is_zero, t_threshold};

use super::inner::{inner_loop, BlockProblem, InnerStats};
use super::SolverConfig;

/// Quadratic model `Q(x) = (q - H beta)' x + x' H x / 2` of the loss around
/// `beta`, with the current middle-loop iterate `x`.
pub struct QuadraticModel<E: Expansion> {
    expansion: E,
    base: BlockVector,
    x: BlockVector,
}

impl<E: Expansion> QuadraticModel<E> {
    pub fn new(expansion: E, base: BlockVector) -> Self {
        Self {
            expansion,
            x: base.clone(),
            base,
        }
    }

    pub fn base(&self) -> &BlockVector {
        &self.base
    }

    pub fn iterate(&self) -> &BlockVector {
        &self.x
    }

    pub fn into_iterate(self) -> BlockVector {
        self.x
    }

    /// Gradient `q` of the loss at the base point.
    pub fn q(&self) -> &[f64] {
        self.expansion.gradient()
    }

    pub fn q_block(&self, block: usize) -> &[f64] {
        &self.expansion.gradient()[self.base.structure().range(block)]
    }

    pub fn expansion_mut(&mut self) -> &mut E {
        &mut self.expansion
    }

    /// Block gradient `g^(J) = q^(J) + [H (x - beta)]^(J) - H_JJ x^(J)`.
    pub fn block_gradient(&mut self, block: usize) -> Vec<f64> {
        let hd = self.expansion.hessian_delta_block(block);
        let xj = self.x.block(block).to_vec();
        let q = &self.expansion.gradient()[self.base.structure().range(block)];
        let mut g: Vec<f64> = q.iter().zip(&hd).map(|(a, b)| a + b).collect();
        let h = self.expansion.hessian_block(block);
        if xj.iter().any(|&v| v != 0.0) {
            for (a, gv) in g.iter_mut().enumerate() {
                *gv -= (0..xj.len()).map(|b| h[(a, b)] * xj[b]).sum::<f64>();
            }
        }
        g
    }

    /// Replaces block `block` of the iterate, updating the tracked displacement.
    pub fn set_block(&mut self, block: usize, values: &[f64]) {
        let change: Vec<f64> = values.iter().zip(self.x.block(block)).map(|(n, o)| n - o).collect();
        if change.iter().any(|&c| c != 0.0) {
            self.expansion.apply_change(block, &change);
            self.x.block_mut(block).copy_from_slice(values);
        }
    }
}

/// Work counters for one middle-loop solve.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MiddleStats {
    pub sweeps: usize,
    pub block_gradients: usize,
    pub zero_tests_passed: usize,
    pub screened: usize,
    /// Screened blocks that the full zero test would not have zeroed.
    pub screening_violations: usize,
    pub inner: InnerStats,
}

impl MiddleStats {
    pub fn accumulate(&mut self, other: &MiddleStats) {
        self.sweeps += other.sweeps;
        self.block_gradients += other.block_gradients;
        self.zero_tests_passed += other.zero_tests_passed;
        self.screened += other.screened;
        self.screening_violations += other.screening_violations;
        self.inner.sweeps += other.inner.sweeps;
        self.inner.escapes += other.inner.escapes;
    }
}

/// Minimizes `Q + lambda Phi` by cyclic block coordinate descent, starting
/// from the model's current iterate. Blocks with `active[J] == false` stay fixed.
pub fn middle_loop<E: Expansion>(
    model: &mut QuadraticModel<E>,
    spec: &PenaltySpec,
    lambda: f64,
    config: &SolverConfig,
    active: Option<&[bool]>,
    stats: &mut MiddleStats,
) -> Result<()> {
    let m = spec.structure().num_blocks();
    let thresholds: Vec<f64> = if config.use_hessian_bound {
        (0..m).map(|j| t_threshold(spec, lambda, j, model.q_block(j))).collect()
    } else {
        vec![0.0; m]
    };
    let l1: Vec<Vec<f64>> = (0..m).map(|j| spec.l1_thresholds(lambda, j)).collect();

    for _ in 0..config.max_middle {
        stats.sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..m {
            if active.is_some_and(|a| !a[j]) {
                continue;
            }
            let penalized = !spec.is_unpenalized(j);
            let at_zero = !model.iterate().is_block_nonzero(j);
            if penalized && at_zero && thresholds[j] > 0.0 {
                let bound = model.expansion.bound(j);
                if bound < thresholds[j] {
                    stats.screened += 1;
                    if config.verify_screening {
                        let g = model.block_gradient(j);
                        if !block_is_zero(spec, lambda, j, &g) {
                            stats.screening_violations += 1;
                        }
                    }
                    continue;
                }
            }

            let g = model.block_gradient(j);
            stats.block_gradients += 1;
            if penalized && block_is_zero(spec, lambda, j, &g) {
                stats.zero_tests_passed += 1;
                if !at_zero {
                    let change = model.iterate().block(j).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    max_change = max_change.max(change);
                    let zeros = vec![0.0; g.len()];
                    model.set_block(j, &zeros);
                }
                continue;
            }

            let start = model.iterate().block(j).to_vec();
            let h = model.expansion.hessian_block(j).clone();
            let problem = BlockProblem {
                gradient: &g,
                hessian: &h,
                group: spec.group_threshold(lambda, j),
                l1: &l1[j],
            };
            let new = inner_loop(&problem, &start, j, config, &mut stats.inner)?;
            let change = new.iter().zip(&start).fold(0.0f64, |a, (n, o)| a.max((n - o).abs()));
            max_change = max_change.max(change);
            model.set_block(j, &new);
        }
        if max_change < config.tol_middle {
            return Ok(());
        }
    }
    Err(SglError::IterationCap {
        stage: "middle",
        cap: config.max_middle,
    })
}
