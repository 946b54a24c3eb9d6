//! Stratified cross-validation over the lambda path and comparison of
//! fits by model size.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blocks::PenaltySpec;
use crate::design::Dataset;
use crate::error::{Result, SglError};
use crate::loss::{predict_classes, MultinomialLoss};
use crate::solver::{fit_path, fit_path_on_grid, FitPath, SolverConfig};

/// Fold index (in `0..k`) of every sample.
///
/// Samples of each class are shuffled with `seed` and dealt round-robin; the
/// dealer position carries over from one class to the next, so fold sizes
/// differ by at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(SglError::InvalidFolds { folds: k, samples: n });
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; n];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

/// Model size `theta` with the smallest grid lambda attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsequencePoint {
    pub theta: usize,
    pub lambda: f64,
    /// Position of `lambda` in the grid.
    pub index: usize,
}

/// For every distinct value of `theta_hats`, the minimal lambda attaining it,
/// sorted by model size.
pub fn subsequence(theta_hats: &[usize], lambdas: &[f64]) -> Vec<SubsequencePoint> {
    let mut out: Vec<SubsequencePoint> = Vec::new();
    for (index, (&theta, &lambda)) in theta_hats.iter().zip(lambdas).enumerate() {
        match out.iter_mut().find(|p| p.theta == theta) {
            Some(p) if lambda < p.lambda => {
                p.lambda = lambda;
                p.index = index;
            }
            Some(_) => {}
            None => out.push(SubsequencePoint { theta, lambda, index }),
        }
    }
    out.sort_by_key(|p| p.theta);
    out
}

/// [`subsequence`] of the solved points of `path`.
pub fn lambda_subsequence(path: &FitPath, spec: &PenaltySpec) -> Vec<SubsequencePoint> {
    let lambdas: Vec<f64> = path.points.iter().map(|p| p.lambda).collect();
    subsequence(&path.theta_hats(spec), &lambdas)
}

/// Cross-validation results for one alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub alpha: f64,
    pub lambda_max: f64,
    pub lambdas: Vec<f64>,
    /// Pooled held-out misclassification rate per lambda.
    pub error: Vec<f64>,
    /// Binomial standard error `sqrt(err (1 - err) / N)`.
    pub std_error: Vec<f64>,
    /// Model sizes of the full-data fit.
    pub theta_hat: Vec<usize>,
    pub pi_hat: Vec<usize>,
    pub subsequence: Vec<SubsequencePoint>,
    /// Full-data path the model sizes come from.
    pub path: FitPath,
}

impl CvCurve {
    /// Index of the smallest lambda with minimal error.
    pub fn best_index(&self) -> usize {
        let min = self.error.iter().copied().fold(f64::INFINITY, f64::min);
        self.error.iter().rposition(|&e| e == min).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<usize>,
    pub curves: Vec<CvCurve>,
}

/// K-fold stratified cross-validation of the multinomial sparse group lasso
/// for each alpha in `alphas`. `base` supplies the block weights.
///
/// Each alpha gets its own lambda grid, from that alpha's lambda max on the
/// full data unless `config.lambdas` is set. Folds run on the current rayon
/// pool; results do not depend on the number of workers.
pub fn cross_validate(
    data: &Dataset,
    base: &PenaltySpec,
    alphas: &[f64],
    config: &SolverConfig,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    let folds = stratified_folds(&data.y, k, seed)?;
    let n = data.n_samples();
    let mut parts = Vec::with_capacity(k);
    for f in 0..k {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        let train_set = data.subset(&train);
        if let Some(class) = train_set.class_counts().iter().position(|&c| c == 0) {
            return Err(SglError::EmptyClass {
                class,
                context: format!(" in the training part of fold {f}"),
            });
        }
        parts.push((train_set, data.subset(&test)));
    }

    let full_loss = MultinomialLoss::new(data);
    let mut curves = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let spec = base.with_alpha(alpha)?;
        let full = fit_path(&full_loss, &spec, config)?.into_result()?;
        let grid = full.lambdas.clone();

        let mistakes: Vec<Vec<usize>> = parts
            .par_iter()
            .map(|(train, test)| {
                let loss = MultinomialLoss::new(train);
                let path = fit_path_on_grid(&loss, &spec, config, &grid)?.into_result()?;
                Ok(path
                    .points
                    .iter()
                    .map(|p| {
                        predict_classes(&test.x, &p.beta, data.n_classes)
                            .iter()
                            .zip(&test.y)
                            .filter(|(a, b)| a != b)
                            .count()
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;

        let error: Vec<f64> = (0..grid.len())
            .map(|l| mistakes.iter().map(|m| m[l]).sum::<usize>() as f64 / n as f64)
            .collect();
        let std_error = error.iter().map(|&e| (e * (1.0 - e) / n as f64).sqrt()).collect();
        let theta_hat = full.theta_hats(&spec);
        let pi_hat = full.points.iter().map(|p| p.pi_hat(&spec)).collect();
        curves.push(CvCurve {
            alpha,
            lambda_max: full.lambda_max,
            subsequence: subsequence(&theta_hat, &grid),
            lambdas: grid,
            error,
            std_error,
            theta_hat,
            pi_hat,
            path: full,
        });
    }
    Ok(CvResult { folds, curves })
}
