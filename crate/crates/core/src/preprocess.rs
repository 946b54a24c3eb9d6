//! Row normalization and column standardization of design matrices.
//!
//! Variances use the `n - 1` denominator. Constant rows or columns are errors.

use nalgebra::DMatrix;

use crate::design::DesignMatrix;
use crate::error::{Result, SglError};

/// Affine map applied by [`standardize_columns`]: `x' = (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    /// Column means that were subtracted; `None` when columns were not centered.
    pub means: Option<Vec<f64>>,
    pub scales: Vec<f64>,
}

impl Standardization {
    /// Maps a coefficient fitted on standardized column `j` back to the raw scale.
    pub fn raw_coefficient(&self, j: usize, value: f64) -> f64 {
        value / self.scales[j]
    }

    /// Amount to add to the intercept of a linear predictor whose raw-scale
    /// coefficients are `raw[j]`, compensating for centering.
    pub fn intercept_shift(&self, raw: &[f64]) -> f64 {
        match &self.means {
            Some(m) => -raw.iter().zip(m).map(|(b, mu)| b * mu).sum::<f64>(),
            None => 0.0,
        }
    }
}

fn mean_and_sd(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Centers and scales every row (sample) to mean 0 and variance 1.
/// The result is dense, since centering fills in zeros.
pub fn normalize_rows(x: &DesignMatrix) -> Result<DesignMatrix> {
    let mut m = x.to_dense();
    let p = m.ncols();
    if p < 2 {
        return Err(SglError::InvalidParameter("row normalization needs at least two columns".into()));
    }
    for i in 0..m.nrows() {
        let (mean, sd) = mean_and_sd(m.row(i).iter().copied(), p);
        if !(sd > 0.0) {
            return Err(SglError::ConstantVector { axis: "row", index: i });
        }
        for j in 0..p {
            m[(i, j)] = (m[(i, j)] - mean) / sd;
        }
    }
    Ok(DesignMatrix::Dense(m))
}

/// Scales every column to variance 1, centering it first when `center` is set.
/// With `center = false` sparse input stays sparse.
pub fn standardize_columns(x: &DesignMatrix, center: bool) -> Result<(DesignMatrix, Standardization)> {
    let n = x.nrows();
    if n < 2 {
        return Err(SglError::InvalidParameter("standardization needs at least two samples".into()));
    }
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let stored = col.len();
        let sum: f64 = col.iter().map(|(_, v)| v).sum();
        let mean = sum / n as f64;
        let ss: f64 =
            col.iter().map(|(_, v)| (v - mean) * (v - mean)).sum::<f64>() + (n - stored) as f64 * mean * mean;
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if !(sd > 0.0) {
            return Err(SglError::ConstantVector {
                axis: "column",
                index: j,
            });
        }
        means.push(mean);
        scales.push(sd);
    }
    let out = if center {
        let mut m: DMatrix<f64> = x.to_dense();
        for (j, mut col) in m.column_iter_mut().enumerate() {
            col.apply(|v| *v = (*v - means[j]) / scales[j]);
        }
        DesignMatrix::Dense(m)
    } else {
        let mut m = x.clone();
        m.map_stored(|_, j, v| v / scales[j]);
        m
    };
    let map = Standardization {
        means: center.then_some(means),
        scales,
    };
    Ok((out, map))
}
