//! Design matrices (dense or compressed sparse column) and labelled datasets.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Result, SglError};

/// An `N x p` design matrix; rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignMatrix {
    Dense(DMatrix<f64>),
    Sparse(CscMatrix<f64>),
}

/// Stored entries of one column.
#[derive(Debug, Clone, Copy)]
pub struct ColumnView<'a> {
    rows: Option<&'a [usize]>,
    values: &'a [f64],
}

impl<'a> ColumnView<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        let rows = self.rows;
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (rows.map_or(k, |r| r[k]), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl DesignMatrix {
    /// Dense matrix from row-major data.
    pub fn from_rows(nrows: usize, ncols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(SglError::DimensionMismatch {
                what: "row-major data",
                expected: nrows * ncols,
                found: data.len(),
            });
        }
        Ok(Self::Dense(DMatrix::from_row_slice(nrows, ncols, data)))
    }

    /// Sparse matrix from zero-based `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut coo = CooMatrix::new(nrows, ncols);
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(SglError::InvalidParameter(format!(
                    "entry ({i}, {j}) outside {nrows} x {ncols} matrix"
                )));
            }
            coo.push(i, j, v);
        }
        Ok(Self::Sparse(CscMatrix::from(&coo)))
    }

    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(m) => m.nrows(),
            Self::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(m) => m.ncols(),
            Self::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Self::Sparse(_))
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        match self {
            Self::Dense(m) => m.iter().filter(|&&v| v != 0.0).count(),
            Self::Sparse(m) => m.values().iter().filter(|&&v| v != 0.0).count(),
        }
    }

    pub fn column(&self, j: usize) -> ColumnView<'_> {
        match self {
            Self::Dense(m) => {
                let n = m.nrows();
                ColumnView {
                    rows: None,
                    values: &m.as_slice()[j * n..(j + 1) * n],
                }
            }
            Self::Sparse(m) => {
                let range = m.col_offsets()[j]..m.col_offsets()[j + 1];
                ColumnView {
                    rows: Some(&m.row_indices()[range.clone()]),
                    values: &m.values()[range],
                }
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Dense(m) => m[(i, j)],
            Self::Sparse(m) => m.get_entry(i, j).map_or(0.0, |e| e.into_value()),
        }
    }

    /// Row `i` as a dense vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.ncols()).map(|j| self.get(i, j)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Self::Dense(m) => m.clone(),
            Self::Sparse(m) => DMatrix::from(m),
        }
    }

    /// The rows listed in `rows`, in that order, keeping the storage kind.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        match self {
            Self::Dense(m) => Self::Dense(m.select_rows(rows.iter())),
            Self::Sparse(m) => {
                let mut position = vec![usize::MAX; m.nrows()];
                for (new, &old) in rows.iter().enumerate() {
                    position[old] = new;
                }
                let mut coo = CooMatrix::new(rows.len(), m.ncols());
                for (i, j, &v) in m.triplet_iter() {
                    if position[i] != usize::MAX {
                        coo.push(position[i], j, v);
                    }
                }
                Self::Sparse(CscMatrix::from(&coo))
            }
        }
    }

    /// Applies `f(row, col, value)` to every stored entry.
    pub fn map_stored(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        match self {
            Self::Dense(m) => {
                let (n, p) = m.shape();
                for j in 0..p {
                    for i in 0..n {
                        m[(i, j)] = f(i, j, m[(i, j)]);
                    }
                }
            }
            Self::Sparse(m) => {
                for (i, j, v) in m.triplet_iter_mut() {
                    *v = f(i, j, *v);
                }
            }
        }
    }
}

/// Design matrix with zero-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DesignMatrix,
    pub y: Vec<usize>,
    pub n_classes: usize,
    /// Original label text per class index, when known.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: DesignMatrix, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(SglError::DimensionMismatch {
                what: "labels",
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(SglError::InvalidParameter(format!("label {bad} outside 0..{n_classes}")));
        }
        let class_names = (1..=n_classes).map(|k| k.to_string()).collect();
        Ok(Self {
            x,
            y,
            n_classes,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        }
    }
}
