//! Smooth convex losses and their local quadratic expansions.
//!
//! The solver only touches a loss through [`LossModel`]: values and gradients
//! for the line search and stopping test, and an [`Expansion`] at the current
//! iterate that serves Hessian blocks, Hessian-times-displacement products and
//! the coordinatewise bound used to skip zero blocks.

use nalgebra::DMatrix;

use crate::blocks::{BlockStructure, BlockVector};
use crate::error::Result;

mod multinomial;
mod quadratic;

pub use multinomial::{multinomial_penalty, multinomial_structure, predict_classes, MultinomialLoss};
pub use quadratic::QuadraticLoss;

/// A convex, twice continuously differentiable loss bounded below.
pub trait LossModel: Sync {
    type Expansion<'a>: Expansion
    where
        Self: 'a;

    fn structure(&self) -> &BlockStructure;

    fn value(&self, beta: &BlockVector) -> f64;

    fn gradient(&self, beta: &BlockVector) -> BlockVector;

    /// Second-order expansion at `beta` with zero displacement.
    ///
    /// With `diagonal` set, the Hessian is replaced by its diagonal everywhere
    /// (blocks, products and bounds).
    fn expand(&self, beta: &BlockVector, diagonal: bool) -> Self::Expansion<'_>;

    /// Diagonal block `block` of the Hessian at `beta`.
    fn hessian_block(&self, beta: &BlockVector, block: usize) -> DMatrix<f64> {
        self.expand(beta, false).hessian_block(block).clone()
    }

    /// Bound `b` with `|[H delta]^(block)| <= b` entrywise, `H` the Hessian at `beta`.
    fn hessian_bound_coeff(&self, beta: &BlockVector, delta: &BlockVector, block: usize) -> f64 {
        let mut e = self.expand(beta, false);
        for j in delta.nonzero_blocks() {
            e.apply_change(j, delta.block(j));
        }
        e.bound(block)
    }

    /// Closed-form optimum of the unpenalized blocks with all other blocks at
    /// zero, as a full parameter vector. `None` when the loss has no closed
    /// form; the solver then optimizes those blocks numerically.
    fn optimize_intercept(&self) -> Result<Option<BlockVector>> {
        Ok(None)
    }
}

/// Quadratic model of a loss around a base point `beta`, tracking a
/// displacement `delta = x - beta` as the middle loop moves `x`.
pub trait Expansion {
    /// Gradient `q` at the base point, flat.
    fn gradient(&self) -> &[f64];

    /// `H_JJ` (cached).
    fn hessian_block(&mut self, block: usize) -> &DMatrix<f64>;

    /// `[H delta]^(J)` for the current displacement.
    fn hessian_delta_block(&self, block: usize) -> Vec<f64>;

    /// `delta^(J) += change`.
    fn apply_change(&mut self, block: usize, change: &[f64]);

    /// Scalar `b_J` with `|[H delta]^(J)| <= b_J` entrywise; cheaper than the product.
    fn bound(&self, block: usize) -> f64;
}
