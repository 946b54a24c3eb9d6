//! Block-partitioned parameter vectors and the penalty weights attached to them.
//!
//! Block indices are zero-based throughout the library. A parameter space of
//! dimension `n` is split into `m` consecutive blocks of sizes `n_0, ..., n_{m-1}`.

use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Result, SglError};

/// Partition of `0..n` into consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    inner: Arc<StructureInner>,
}

#[derive(Debug, PartialEq, Eq)]
struct StructureInner {
    dims: Vec<usize>,
    // offsets[J]..offsets[J + 1] is block J; len = m + 1
    offsets: Vec<usize>,
    block_of: Vec<usize>,
}

impl BlockStructure {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(SglError::InvalidParameter("block structure needs at least one block".into()));
        }
        if let Some(j) = dims.iter().position(|&d| d == 0) {
            return Err(SglError::InvalidParameter(format!("block {j} has dimension 0")));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        offsets.push(0);
        let mut block_of = Vec::new();
        for (j, &d) in dims.iter().enumerate() {
            offsets.push(offsets[j] + d);
            block_of.extend(std::iter::repeat_n(j, d));
        }
        Ok(Self {
            inner: Arc::new(StructureInner {
                dims,
                offsets,
                block_of,
            }),
        })
    }

    /// `count` blocks of equal size `dim`.
    pub fn uniform(count: usize, dim: usize) -> Result<Self> {
        Self::new(vec![dim; count])
    }

    /// Number of blocks `m`.
    pub fn num_blocks(&self) -> usize {
        self.inner.dims.len()
    }

    /// Total dimension `n`.
    pub fn dim(&self) -> usize {
        *self.inner.offsets.last().unwrap()
    }

    pub fn dims(&self) -> &[usize] {
        &self.inner.dims
    }

    pub fn block_dim(&self, block: usize) -> usize {
        self.inner.dims[block]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.inner.offsets
    }

    /// Flat index range of `block`.
    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.inner.offsets[block]..self.inner.offsets[block + 1]
    }

    /// Maps a flat index to `(block, index within block)`.
    pub fn locate(&self, flat: usize) -> Option<(usize, usize)> {
        let block = *self.inner.block_of.get(flat)?;
        Some((block, flat - self.inner.offsets[block]))
    }

    pub(crate) fn check_block(&self, block: usize) -> Result<()> {
        if block < self.num_blocks() {
            Ok(())
        } else {
            Err(SglError::BlockOutOfRange {
                index: block,
                count: self.num_blocks(),
            })
        }
    }
}

/// A parameter vector with block views and exact nonzero bookkeeping.
///
/// A block counts as nonzero when any of its entries differs from `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    structure: BlockStructure,
    values: Vec<f64>,
    nonzero: Vec<bool>,
}

impl BlockVector {
    pub fn zeros(structure: &BlockStructure) -> Self {
        Self {
            structure: structure.clone(),
            values: vec![0.0; structure.dim()],
            nonzero: vec![false; structure.num_blocks()],
        }
    }

    pub fn from_values(structure: &BlockStructure, values: Vec<f64>) -> Result<Self> {
        if values.len() != structure.dim() {
            return Err(SglError::DimensionMismatch {
                what: "block vector values",
                expected: structure.dim(),
                found: values.len(),
            });
        }
        let mut v = Self {
            structure: structure.clone(),
            values,
            nonzero: vec![false; structure.num_blocks()],
        };
        v.refresh_all();
        Ok(v)
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Block `block` as a slice. Panics when out of range.
    pub fn block(&self, block: usize) -> &[f64] {
        &self.values[self.structure.range(block)]
    }

    pub fn get_block(&self, block: usize) -> Result<&[f64]> {
        self.structure.check_block(block)?;
        Ok(self.block(block))
    }

    /// Mutable view of one block; the nonzero flag is refreshed when the view drops.
    pub fn block_mut(&mut self, block: usize) -> BlockMut<'_> {
        let range = self.structure.range(block);
        BlockMut {
            values: &mut self.values[range],
            flag: &mut self.nonzero[block],
        }
    }

    pub fn get_block_mut(&mut self, block: usize) -> Result<BlockMut<'_>> {
        self.structure.check_block(block)?;
        Ok(self.block_mut(block))
    }

    pub fn set_block(&mut self, block: usize, values: &[f64]) -> Result<()> {
        self.structure.check_block(block)?;
        let dim = self.structure.block_dim(block);
        if values.len() != dim {
            return Err(SglError::DimensionMismatch {
                what: "block assignment",
                expected: dim,
                found: values.len(),
            });
        }
        self.block_mut(block).copy_from_slice(values);
        Ok(())
    }

    /// Writes exact zeros into `block`.
    pub fn zero_block(&mut self, block: usize) {
        self.block_mut(block).fill(0.0);
    }

    pub fn is_block_nonzero(&self, block: usize) -> bool {
        self.nonzero[block]
    }

    pub fn nonzero_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.nonzero
            .iter()
            .enumerate()
            .filter_map(|(j, &nz)| nz.then_some(j))
    }

    /// Number of nonzero blocks.
    pub fn theta_hat(&self) -> usize {
        self.nonzero.iter().filter(|&&nz| nz).count()
    }

    /// Number of nonzero entries.
    pub fn pi_hat(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }

    /// Applies `f` to every entry and refreshes bookkeeping.
    pub fn update_all(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        for (i, v) in self.values.iter_mut().enumerate() {
            f(i, v);
        }
        self.refresh_all();
    }

    /// `self + t * direction` as a new vector.
    pub fn add_scaled(&self, t: f64, direction: &[f64]) -> BlockVector {
        let mut out = self.clone();
        out.update_all(|i, v| *v += t * direction[i]);
        out
    }

    fn refresh_all(&mut self) {
        for j in 0..self.structure.num_blocks() {
            let r = self.structure.range(j);
            self.nonzero[j] = self.values[r].iter().any(|&v| v != 0.0);
        }
    }
}

/// Mutable block view returned by [`BlockVector::block_mut`].
pub struct BlockMut<'a> {
    values: &'a mut [f64],
    flag: &'a mut bool,
}

impl Deref for BlockMut<'_> {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        self.values
    }
}

impl DerefMut for BlockMut<'_> {
    fn deref_mut(&mut self) -> &mut [f64] {
        self.values
    }
}

impl Drop for BlockMut<'_> {
    fn drop(&mut self) {
        *self.flag = self.values.iter().any(|&v| v != 0.0);
    }
}

/// Weights of the sparse group lasso penalty over a block structure.
///
/// `alpha` mixes the group norm term (weight `1 - alpha`) with the weighted L1
/// term (weight `alpha`). A block whose group weight and all parameter weights
/// are zero is unpenalized; intercepts are represented this way.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    structure: BlockStructure,
    alpha: f64,
    gamma: Vec<f64>,
    xi: Vec<f64>,
    unpenalized: Vec<bool>,
}

impl PenaltySpec {
    pub fn new(structure: &BlockStructure, alpha: f64, gamma: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SglError::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
        }
        if gamma.len() != structure.num_blocks() {
            return Err(SglError::DimensionMismatch {
                what: "group weights",
                expected: structure.num_blocks(),
                found: gamma.len(),
            });
        }
        if xi.len() != structure.dim() {
            return Err(SglError::DimensionMismatch {
                what: "parameter weights",
                expected: structure.dim(),
                found: xi.len(),
            });
        }
        if gamma.iter().chain(&xi).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SglError::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let unpenalized = (0..structure.num_blocks())
            .map(|j| gamma[j] == 0.0 && xi[structure.range(j)].iter().all(|&w| w == 0.0))
            .collect();
        Ok(Self {
            structure: structure.clone(),
            alpha,
            gamma,
            xi,
            unpenalized,
        })
    }

    /// Group weights `sqrt(n_J)`, unit parameter weights, every block penalized.
    pub fn standard(structure: &BlockStructure, alpha: f64) -> Result<Self> {
        let gamma = structure.dims().iter().map(|&d| (d as f64).sqrt()).collect();
        Self::new(structure, alpha, gamma, vec![1.0; structure.dim()])
    }

    /// Same weights with a different mixing parameter.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(&self.structure, alpha, self.gamma.clone(), self.xi.clone())
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn block_xi(&self, block: usize) -> &[f64] {
        &self.xi[self.structure.range(block)]
    }

    pub fn is_unpenalized(&self, block: usize) -> bool {
        self.unpenalized[block]
    }

    pub fn penalized_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.structure.num_blocks()).filter(|&j| !self.unpenalized[j])
    }

    /// Scaled group weight `lambda (1 - alpha) gamma_J`.
    pub fn group_threshold(&self, lambda: f64, block: usize) -> f64 {
        lambda * (1.0 - self.alpha) * self.gamma[block]
    }

    /// Scaled parameter weights `lambda alpha xi^(J)`.
    pub fn l1_thresholds(&self, lambda: f64, block: usize) -> Vec<f64> {
        self.block_xi(block).iter().map(|&w| lambda * self.alpha * w).collect()
    }

    /// Penalty restricted to one block, evaluated at `x`.
    pub fn block_phi(&self, block: usize, x: &[f64]) -> f64 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l1: f64 = x.iter().zip(self.block_xi(block)).map(|(v, w)| w * v.abs()).sum();
        (1.0 - self.alpha) * self.gamma[block] * norm + self.alpha * l1
    }

    /// Penalty of a flat parameter vector.
    pub fn phi_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.structure.dim() {
            return Err(SglError::DimensionMismatch {
                what: "penalty argument",
                expected: self.structure.dim(),
                found: values.len(),
            });
        }
        Ok((0..self.structure.num_blocks())
            .map(|j| self.block_phi(j, &values[self.structure.range(j)]))
            .sum())
    }

    pub fn phi(&self, beta: &BlockVector) -> Result<f64> {
        self.phi_values(beta.values())
    }

    /// Nonzero blocks among the penalized ones.
    pub fn theta_hat(&self, beta: &BlockVector) -> usize {
        self.penalized_blocks().filter(|&j| beta.is_block_nonzero(j)).count()
    }

    /// Nonzero entries among the penalized blocks.
    pub fn pi_hat(&self, beta: &BlockVector) -> usize {
        self.penalized_blocks()
            .map(|j| beta.block(j).iter().filter(|&&v| v != 0.0).count())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v23(values: Vec<f64>) -> BlockVector {
        BlockVector::from_values(&BlockStructure::new(vec![2, 3]).unwrap(), values).unwrap()
    }

    #[test]
    fn block_views() {
        let v = v23(vec![1.0, 2.0, 0.0, 0.0, 5.0]);
        assert_eq!(v.block(1), &[0.0, 0.0, 5.0]);
        assert_eq!(v.block(0), &[1.0, 2.0]);
        let z = v23(vec![0.0; 5]);
        assert_eq!(z.block(1), &[0.0; 3]);
        assert!(matches!(v.get_block(2), Err(SglError::BlockOutOfRange { index: 2, count: 2 })));
    }

    #[test]
    fn counts() {
        assert_eq!(v23(vec![1.0, 2.0, 0.0, 0.0, 5.0]).theta_hat(), 2);
        assert_eq!(v23(vec![1.0, 2.0, 0.0, 0.0, 5.0]).pi_hat(), 3);
        assert_eq!(v23(vec![0.0; 5]).theta_hat(), 0);
        assert_eq!(v23(vec![0.0; 5]).pi_hat(), 0);
        assert_eq!(v23(vec![0.0, 0.0, 0.0, 0.0, 5.0]).theta_hat(), 1);
        assert_eq!(v23(vec![1.0; 5]).pi_hat(), 5);
    }

    #[test]
    fn mutation_updates_bookkeeping() {
        let mut v = v23(vec![1.0, 2.0, 0.0, 0.0, 5.0]);
        v.block_mut(0).fill(0.0);
        assert_eq!(v.nonzero_blocks().collect::<Vec<_>>(), vec![1]);
        v.block_mut(0)[1] = -3.0;
        assert_eq!(v.nonzero_blocks().collect::<Vec<_>>(), vec![0, 1]);
        v.zero_block(1);
        assert_eq!(v.theta_hat(), 1);
        assert!(v.set_block(1, &[1.0]).is_err());
    }

    #[test]
    fn locate_maps_every_index_once() {
        let s = BlockStructure::new(vec![2, 1, 3]).unwrap();
        let located: Vec<_> = (0..s.dim()).map(|i| s.locate(i).unwrap()).collect();
        assert_eq!(located, vec![(0, 0), (0, 1), (1, 0), (2, 0), (2, 1), (2, 2)]);
        assert_eq!(s.locate(6), None);
        assert_eq!(s.offsets(), &[0, 2, 3, 6]);
    }

    #[test]
    fn rejects_bad_weights() {
        let s = BlockStructure::new(vec![2]).unwrap();
        assert!(PenaltySpec::new(&s, 1.5, vec![1.0], vec![1.0, 1.0]).is_err());
        assert!(PenaltySpec::new(&s, 0.5, vec![-1.0], vec![1.0, 1.0]).is_err());
        assert!(PenaltySpec::new(&s, 0.5, vec![1.0], vec![1.0]).is_err());
        let spec = PenaltySpec::new(&s, 0.5, vec![0.0], vec![0.0, 0.0]).unwrap();
        assert!(spec.is_unpenalized(0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_vector() -> impl Strategy<Value = BlockVector> {
            prop::collection::vec(1usize..4, 1..5).prop_flat_map(|dims| {
                let n: usize = dims.iter().sum();
                prop::collection::vec(prop_oneof![Just(0.0), -5.0..5.0f64], n).prop_map(move |vals| {
                    BlockVector::from_values(&BlockStructure::new(dims.clone()).unwrap(), vals).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn count_ordering(v in arb_vector()) {
                prop_assert!(v.theta_hat() <= v.pi_hat());
                prop_assert!(v.pi_hat() <= v.len());
                prop_assert_eq!(v.theta_hat() == 0, v.values().iter().all(|&x| x == 0.0));
            }

            #[test]
            fn block_write_round_trips(mut v in arb_vector(), seed in any::<u64>()) {
                let block = (seed as usize) % v.structure().num_blocks();
                let vals: Vec<f64> = (0..v.structure().block_dim(block))
                    .map(|i| (seed.wrapping_mul(i as u64 + 7) % 1000) as f64 / 7.0 - 50.0)
                    .collect();
                v.set_block(block, &vals).unwrap();
                prop_assert_eq!(v.block(block), &vals[..]);
                let expect: Vec<usize> = (0..v.structure().num_blocks())
                    .filter(|&j| v.block(j).iter().any(|&x| x != 0.0)).collect();
                prop_assert_eq!(v.nonzero_blocks().collect::<Vec<_>>(), expect);
            }
        }
    }
}
