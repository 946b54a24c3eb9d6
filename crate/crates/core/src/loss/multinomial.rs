use nalgebra::DMatrix;

use super::{Expansion, LossModel};
use crate::blocks::{BlockStructure, BlockVector, PenaltySpec};
use crate::design::Dataset;
use crate::error::{Result, SglError};

/// Parameter layout for `p` features and `k` classes: block 0 holds the
/// intercepts, block `j + 1` the `k` coefficients of feature `j`.
pub fn multinomial_structure(features: usize, classes: usize) -> BlockStructure {
    BlockStructure::uniform(features + 1, classes).expect("classes >= 1")
}

/// Default multinomial penalty: intercept unpenalized, group weights
/// `sqrt(K)`, unit parameter weights.
pub fn multinomial_penalty(features: usize, classes: usize, alpha: f64) -> Result<PenaltySpec> {
    let structure = multinomial_structure(features, classes);
    let mut gamma = vec![(classes as f64).sqrt(); features + 1];
    gamma[0] = 0.0;
    let mut xi = vec![1.0; structure.dim()];
    xi[..classes].fill(0.0);
    PenaltySpec::new(&structure, alpha, gamma, xi)
}

/// Negative multinomial log-likelihood in the symmetric (softmax) parametrization.
#[derive(Debug, Clone)]
pub struct MultinomialLoss<'d> {
    data: &'d Dataset,
    structure: BlockStructure,
}

impl<'d> MultinomialLoss<'d> {
    pub fn new(data: &'d Dataset) -> Self {
        Self {
            structure: multinomial_structure(data.n_features(), data.n_classes),
            data,
        }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn classes(&self) -> usize {
        self.data.n_classes
    }

    /// Linear predictors `eta_i = beta0 + beta x_i`, row-major `N x K`.
    pub fn linear_predictors(&self, beta: &BlockVector) -> Vec<f64> {
        linear_predictors(&self.data.x, beta, self.classes())
    }

    /// Class probabilities, row-major `N x K`.
    pub fn probabilities(&self, beta: &BlockVector) -> Vec<f64> {
        let k = self.classes();
        let mut eta = self.linear_predictors(beta);
        for row in eta.chunks_mut(k) {
            softmax_in_place(row);
        }
        eta
    }
}

pub(crate) fn linear_predictors(x: &crate::design::DesignMatrix, beta: &BlockVector, k: usize) -> Vec<f64> {
    let n = x.nrows();
    let mut eta = Vec::with_capacity(n * k);
    let b0 = beta.block(0);
    for _ in 0..n {
        eta.extend_from_slice(b0);
    }
    for j in beta.nonzero_blocks().filter(|&j| j > 0) {
        let bj = beta.block(j);
        for (i, xv) in x.column(j - 1).iter() {
            if xv != 0.0 {
                for (e, b) in eta[i * k..(i + 1) * k].iter_mut().zip(bj) {
                    *e += xv * b;
                }
            }
        }
    }
    eta
}

/// Most probable class of every row of `x`; ties go to the lowest class index.
pub fn predict_classes(x: &crate::design::DesignMatrix, beta: &BlockVector, classes: usize) -> Vec<usize> {
    linear_predictors(x, beta, classes)
        .chunks(classes)
        .map(|row| {
            let mut best = 0;
            for (k, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Max-shifted softmax; returns the log-sum-exp of the input.
pub(crate) fn softmax_in_place(row: &mut [f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl LossModel for MultinomialLoss<'_> {
    type Expansion<'a>
        = MultinomialExpansion<'a>
    where
        Self: 'a;

    fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    fn value(&self, beta: &BlockVector) -> f64 {
        let k = self.classes();
        let eta = self.linear_predictors(beta);
        eta.chunks(k)
            .zip(&self.data.y)
            .map(|(row, &y)| log_sum_exp(row) - row[y])
            .sum()
    }

    fn gradient(&self, beta: &BlockVector) -> BlockVector {
        let probs = self.probabilities(beta);
        let q = gradient_from_probs(self.data, &probs, self.classes());
        BlockVector::from_values(&self.structure, q).unwrap()
    }

    fn expand(&self, beta: &BlockVector, diagonal: bool) -> MultinomialExpansion<'_> {
        let k = self.classes();
        let n = self.data.n_samples();
        let probs = self.probabilities(beta);
        let q = gradient_from_probs(self.data, &probs, k);
        MultinomialExpansion {
            data: self.data,
            k,
            structure: &self.structure,
            q,
            probs,
            eta_change: vec![0.0; n * k],
            change_norms: vec![0.0; n],
            delta: vec![0.0; self.structure.dim()],
            diagonal,
            cache: vec![None; self.structure.num_blocks()],
        }
    }

    fn optimize_intercept(&self) -> Result<Option<BlockVector>> {
        let counts = self.data.class_counts();
        let n = self.data.n_samples() as f64;
        if let Some(class) = counts.iter().position(|&c| c == 0) {
            return Err(SglError::EmptyClass {
                class,
                context: String::new(),
            });
        }
        let mut beta = BlockVector::zeros(&self.structure);
        let b0: Vec<f64> = counts.iter().map(|&c| (c as f64 / n).ln()).collect();
        beta.set_block(0, &b0)?;
        Ok(Some(beta))
    }
}

fn gradient_from_probs(data: &Dataset, probs: &[f64], k: usize) -> Vec<f64> {
    let mut resid = probs.to_vec();
    for (i, &y) in data.y.iter().enumerate() {
        resid[i * k + y] -= 1.0;
    }
    let p = data.n_features();
    let mut q = vec![0.0; (p + 1) * k];
    for row in resid.chunks(k) {
        for (g, r) in q[..k].iter_mut().zip(row) {
            *g += r;
        }
    }
    for j in 0..p {
        let block = &mut q[(j + 1) * k..(j + 2) * k];
        for (i, xv) in data.x.column(j).iter() {
            if xv != 0.0 {
                for (g, r) in block.iter_mut().zip(&resid[i * k..(i + 1) * k]) {
                    *g += xv * r;
                }
            }
        }
    }
    q
}

/// Expansion state: probabilities at the base point plus the change in linear
/// predictors `D_i = sum_j x_ij delta^(j) + delta^(0)` induced by the displacement.
pub struct MultinomialExpansion<'a> {
    data: &'a Dataset,
    k: usize,
    structure: &'a BlockStructure,
    q: Vec<f64>,
    probs: Vec<f64>,
    eta_change: Vec<f64>,
    change_norms: Vec<f64>,
    delta: Vec<f64>,
    diagonal: bool,
    cache: Vec<Option<DMatrix<f64>>>,
}

impl MultinomialExpansion<'_> {
    // Visits (row, x value) of the column behind `block`; the intercept column is all ones.
    fn for_column(&self, block: usize, mut f: impl FnMut(usize, f64)) {
        if block == 0 {
            for i in 0..self.data.n_samples() {
                f(i, 1.0);
            }
        } else {
            for (i, xv) in self.data.x.column(block - 1).iter() {
                if xv != 0.0 {
                    f(i, xv);
                }
            }
        }
    }
}

impl Expansion for MultinomialExpansion<'_> {
    fn gradient(&self) -> &[f64] {
        &self.q
    }

    fn hessian_block(&mut self, block: usize) -> &DMatrix<f64> {
        if self.cache[block].is_none() {
            let k = self.k;
            let mut h = DMatrix::zeros(k, k);
            let diagonal = self.diagonal;
            let probs = &self.probs;
            self.for_column(block, |i, xv| {
                let p = &probs[i * k..(i + 1) * k];
                let w = xv * xv;
                for a in 0..k {
                    h[(a, a)] += w * p[a];
                    if diagonal {
                        h[(a, a)] -= w * p[a] * p[a];
                    } else {
                        for b in 0..k {
                            h[(a, b)] -= w * p[a] * p[b];
                        }
                    }
                }
            });
            self.cache[block] = Some(h);
        }
        self.cache[block].as_ref().unwrap()
    }

    fn hessian_delta_block(&self, block: usize) -> Vec<f64> {
        let k = self.k;
        if self.diagonal {
            let h = self.cache[block]
                .as_ref()
                .map(|h| h.diagonal().as_slice().to_vec())
                .unwrap_or_else(|| {
                    let mut d = vec![0.0; k];
                    self.for_column(block, |i, xv| {
                        for (a, da) in d.iter_mut().enumerate() {
                            let p = self.probs[i * k + a];
                            *da += xv * xv * p * (1.0 - p);
                        }
                    });
                    d
                });
            let r = self.structure.range(block);
            return h.iter().zip(&self.delta[r]).map(|(hh, d)| hh * d).collect();
        }
        let mut out = vec![0.0; k];
        self.for_column(block, |i, xv| {
            let p = &self.probs[i * k..(i + 1) * k];
            let d = &self.eta_change[i * k..(i + 1) * k];
            let pd: f64 = p.iter().zip(d).map(|(a, b)| a * b).sum();
            for a in 0..k {
                out[a] += xv * p[a] * (d[a] - pd);
            }
        });
        out
    }

    fn apply_change(&mut self, block: usize, change: &[f64]) {
        let k = self.k;
        let r = self.structure.range(block);
        for (d, c) in self.delta[r].iter_mut().zip(change) {
            *d += c;
        }
        if self.diagonal {
            return;
        }
        let mut eta_change = std::mem::take(&mut self.eta_change);
        let mut norms = std::mem::take(&mut self.change_norms);
        self.for_column(block, |i, xv| {
            let row = &mut eta_change[i * k..(i + 1) * k];
            for (e, c) in row.iter_mut().zip(change) {
                *e += xv * c;
            }
            norms[i] = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        });
        self.eta_change = eta_change;
        self.change_norms = norms;
    }

    fn bound(&self, block: usize) -> f64 {
        if self.diagonal {
            let k = self.k;
            let r = self.structure.range(block);
            let mut d = vec![0.0; k];
            self.for_column(block, |i, xv| {
                for (a, da) in d.iter_mut().enumerate() {
                    let p = self.probs[i * k + a];
                    *da += xv * xv * p * (1.0 - p);
                }
            });
            return d
                .iter()
                .zip(&self.delta[r])
                .map(|(h, dl)| (h * dl).abs())
                .fold(0.0, f64::max);
        }
        // spectral norm of diag(p) - p p' is at most 1/2
        let mut b = 0.0;
        self.for_column(block, |i, xv| b += xv.abs() * self.change_norms[i]);
        0.5 * b
    }
}
