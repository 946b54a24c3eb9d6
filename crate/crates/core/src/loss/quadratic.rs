use nalgebra::{DMatrix, DVector};

use super::{Expansion, LossModel};
use crate::blocks::{BlockStructure, BlockVector};
use crate::error::{Result, SglError};

/// `f(beta) = beta' A beta / 2 + b' beta` for a symmetric positive semidefinite `A`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    structure: BlockStructure,
    a: DMatrix<f64>,
    b: DVector<f64>,
    row_norms: Vec<f64>,
}

impl QuadraticLoss {
    pub fn new(structure: &BlockStructure, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let n = structure.dim();
        if a.shape() != (n, n) || b.len() != n {
            return Err(SglError::DimensionMismatch {
                what: "quadratic loss",
                expected: n,
                found: if b.len() != n { b.len() } else { a.nrows() },
            });
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(SglError::Asymmetric);
        }
        let row_norms = a.row_iter().map(|r| r.norm()).collect();
        Ok(Self {
            structure: structure.clone(),
            a,
            b: DVector::from_vec(b),
            row_norms,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        self.b.as_slice()
    }
}

impl LossModel for QuadraticLoss {
    type Expansion<'a> = QuadraticExpansion<'a>;

    fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    fn value(&self, beta: &BlockVector) -> f64 {
        let x = DVector::from_column_slice(beta.values());
        0.5 * x.dot(&(&self.a * &x)) + self.b.dot(&x)
    }

    fn gradient(&self, beta: &BlockVector) -> BlockVector {
        let x = DVector::from_column_slice(beta.values());
        let g = &self.a * &x + &self.b;
        BlockVector::from_values(&self.structure, g.as_slice().to_vec()).unwrap()
    }

    fn expand(&self, beta: &BlockVector, diagonal: bool) -> QuadraticExpansion<'_> {
        let n = self.structure.dim();
        QuadraticExpansion {
            loss: self,
            q: self.gradient(beta).into_values(),
            h_delta: vec![0.0; n],
            delta: vec![0.0; n],
            delta_norm_sq: 0.0,
            diagonal,
            cache: vec![None; self.structure.num_blocks()],
        }
    }
}

pub struct QuadraticExpansion<'a> {
    loss: &'a QuadraticLoss,
    q: Vec<f64>,
    h_delta: Vec<f64>,
    delta: Vec<f64>,
    delta_norm_sq: f64,
    diagonal: bool,
    cache: Vec<Option<DMatrix<f64>>>,
}

impl Expansion for QuadraticExpansion<'_> {
    fn gradient(&self) -> &[f64] {
        &self.q
    }

    fn hessian_block(&mut self, block: usize) -> &DMatrix<f64> {
        let loss = self.loss;
        let diagonal = self.diagonal;
        self.cache[block].get_or_insert_with(|| {
            let r = loss.structure.range(block);
            let sub = loss.a.view((r.start, r.start), (r.len(), r.len())).into_owned();
            if diagonal {
                DMatrix::from_diagonal(&sub.diagonal())
            } else {
                sub
            }
        })
    }

    fn hessian_delta_block(&self, block: usize) -> Vec<f64> {
        let r = self.loss.structure.range(block);
        if self.diagonal {
            r.map(|i| self.loss.a[(i, i)] * self.delta[i]).collect()
        } else {
            self.h_delta[r].to_vec()
        }
    }

    fn apply_change(&mut self, block: usize, change: &[f64]) {
        let r = self.loss.structure.range(block);
        for (k, i) in r.enumerate() {
            let old = self.delta[i];
            let new = old + change[k];
            self.delta_norm_sq += new * new - old * old;
            self.delta[i] = new;
            if change[k] != 0.0 && !self.diagonal {
                let col = self.loss.a.column(i);
                for (hd, a) in self.h_delta.iter_mut().zip(col.iter()) {
                    *hd += a * change[k];
                }
            }
        }
    }

    fn bound(&self, block: usize) -> f64 {
        let r = self.loss.structure.range(block);
        if self.diagonal {
            return r
                .map(|i| (self.loss.a[(i, i)] * self.delta[i]).abs())
                .fold(0.0, f64::max);
        }
        // Cauchy-Schwarz on each row of A
        let norm = self.delta_norm_sq.max(0.0).sqrt();
        r.map(|i| self.loss.row_norms[i] * norm).fold(0.0, f64::max)
    }
}
