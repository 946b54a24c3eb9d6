//! Gaussian multiclass simulation: sample class centers, fit the sparse group
//! lasso for several alphas, and compare test error against the Bayes rate and
//! the recovered nonzero pattern against the true one.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use rayon::prelude::*;

use crate::blocks::BlockVector;
use crate::design::{Dataset, DesignMatrix};
use crate::error::{Result, SglError};
use crate::loss::{multinomial_penalty, predict_classes};
use crate::modelselect::cross_validate;
use crate::solver::SolverConfig;

/// How the informative part of each class center is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterDistribution {
    /// Zero with probability `p0`, otherwise uniform on `[-2, 2]`.
    Sparse { p0: f64 },
    /// Laplace with location 0 and the given scale.
    Dense { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub replicates: usize,
    /// Training samples per class.
    pub per_class: usize,
    pub classes: usize,
    /// Informative features.
    pub p_a: usize,
    /// Pure-noise features.
    pub p_b: usize,
    /// Weight of the identity in the covariance.
    pub delta: f64,
    pub centers: CenterDistribution,
    pub test_per_class: usize,
    pub bayes_draws: usize,
    pub folds: usize,
    pub seed: u64,
}

/// Informative dimension used with sparse centers: `floor(5 / (1 - p0))`.
pub fn sparse_p_a(p0: f64) -> usize {
    // 1 - 0.95 rounds up slightly, which would turn 100 into 99.
    (5.0 / (1.0 - p0) + 1e-9).floor() as usize
}

impl SimConfig {
    fn with_centers(centers: CenterDistribution, p_a: usize) -> Self {
        Self {
            replicates: 10,
            per_class: 15,
            classes: 5,
            p_a,
            p_b: 20,
            delta: 0.25,
            centers,
            test_per_class: 100,
            bayes_draws: 10_000,
            folds: 10,
            seed: 1,
        }
    }

    /// `p0 = 0.95`.
    pub fn thin() -> Self {
        Self::with_centers(CenterDistribution::Sparse { p0: 0.95 }, sparse_p_a(0.95))
    }

    /// `p0 = 0.8`.
    pub fn sparse() -> Self {
        Self::with_centers(CenterDistribution::Sparse { p0: 0.8 }, sparse_p_a(0.8))
    }

    /// Laplace scale 0.2 on 25 informative features.
    pub fn dense() -> Self {
        Self::with_centers(CenterDistribution::Dense { scale: 0.2 }, 25)
    }

    pub const PRESETS: [&'static str; 3] = ["thin", "sparse", "dense"];

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "thin" => Ok(Self::thin()),
            "sparse" => Ok(Self::sparse()),
            "dense" => Ok(Self::dense()),
            other => Err(SglError::InvalidParameter(format!(
                "unknown preset '{other}' (expected one of: {})",
                Self::PRESETS.join(", ")
            ))),
        }
    }

    pub fn features(&self) -> usize {
        self.p_a + self.p_b
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SglError::InvalidParameter(msg.to_string()));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        match self.centers {
            CenterDistribution::Sparse { p0 } if !(0.0..1.0).contains(&p0) => return bad("p0 must lie in [0, 1)"),
            CenterDistribution::Dense { scale } if !(scale > 0.0) => return bad("laplace scale must be positive"),
            _ => {}
        }
        if self.replicates == 0 || self.per_class == 0 || self.test_per_class == 0 || self.bayes_draws == 0 {
            return bad("replicates, per_class, test_per_class and bayes_draws must be positive");
        }
        if self.classes < 2 {
            return bad("at least two classes are needed");
        }
        if self.features() == 0 {
            return bad("at least one feature is needed");
        }
        if self.folds < 2 || self.folds > self.per_class * self.classes {
            return Err(SglError::InvalidFolds {
                folds: self.folds,
                samples: self.per_class * self.classes,
            });
        }
        Ok(())
    }
}

/// Class centers and shared covariance of one simulated problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MuConfiguration {
    /// `K x p`, one center per row.
    pub centers: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
}

impl MuConfiguration {
    /// Nonzero pattern of the centers, `K x p` row-major.
    pub fn nonzero(&self) -> Vec<bool> {
        let (k, p) = self.centers.shape();
        (0..k)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .map(|(i, j)| self.centers[(i, j)] != 0.0)
            .collect()
    }
}

/// Draws `K x (p_a + p_b)` centers whose last `p_b` columns are zero.
pub fn sample_centers<R: Rng>(config: &SimConfig, rng: &mut R) -> DMatrix<f64> {
    let p = config.features();
    let mut centers = DMatrix::zeros(config.classes, p);
    for i in 0..config.classes {
        for j in 0..config.p_a {
            centers[(i, j)] = sample_entry(config.centers, rng);
        }
    }
    centers
}

fn sample_entry<R: Rng>(dist: CenterDistribution, rng: &mut R) -> f64 {
    match dist {
        CenterDistribution::Sparse { p0 } => {
            if rng.random::<f64>() < p0 {
                0.0
            } else {
                rng.random_range(-2.0..=2.0)
            }
        }
        CenterDistribution::Dense { scale } => {
            let exp = Exp::new(1.0 / scale).expect("positive scale");
            rng.sample(exp) - rng.sample(exp)
        }
    }
}

/// `A A' / p` with standard normal `p x p` matrix `A`.
pub fn random_base_covariance<R: Rng>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut s = &a * a.transpose() / p as f64;
    s.fill_upper_triangle_with_lower_triangle();
    s
}

/// `(1 - delta) base + delta I`.
pub fn build_covariance(base: &DMatrix<f64>, delta: f64) -> Result<DMatrix<f64>> {
    if !base.is_square() {
        return Err(SglError::DimensionMismatch {
            what: "covariance columns",
            expected: base.nrows(),
            found: base.ncols(),
        });
    }
    let scale = base.amax().max(1.0);
    if (base - base.transpose()).amax() > 1e-12 * scale {
        return Err(SglError::Asymmetric);
    }
    let p = base.nrows();
    Ok(base * (1.0 - delta) + DMatrix::identity(p, p) * delta)
}

/// Samples `x ~ N(center, L L')` for every requested class label.
struct GaussianSampler {
    centers: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    fn new(mu: &MuConfiguration) -> Result<Self> {
        let chol = Cholesky::new(mu.covariance.clone()).ok_or(SglError::NotPositiveDefinite)?;
        Ok(Self {
            centers: mu.centers.clone(),
            factor: chol.l(),
        })
    }

    fn draw<R: Rng>(&self, class: usize, rng: &mut R) -> DVector<f64> {
        let p = self.centers.ncols();
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z + self.centers.row(class).transpose()
    }

    fn dataset<R: Rng>(&self, per_class: usize, rng: &mut R) -> Result<Dataset> {
        let k = self.centers.nrows();
        let p = self.centers.ncols();
        let mut rows = Vec::with_capacity(per_class * k * p);
        let mut y = Vec::with_capacity(per_class * k);
        for class in 0..k {
            for _ in 0..per_class {
                rows.extend(self.draw(class, rng).iter());
                y.push(class);
            }
        }
        Dataset::new(DesignMatrix::from_rows(y.len(), p, &rows)?, y, k)
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Error rate of the optimal (linear discriminant) classifier, estimated from
/// `draws` samples with uniformly drawn classes.
pub fn bayes_rate<R: Rng>(mu: &MuConfiguration, draws: usize, rng: &mut R) -> Result<Estimate> {
    let chol = Cholesky::new(mu.covariance.clone()).ok_or(SglError::NotPositiveDefinite)?;
    let sampler = GaussianSampler {
        centers: mu.centers.clone(),
        factor: chol.l(),
    };
    let k = mu.centers.nrows();
    // Discriminant k: w_k' x + c_k with w_k = S^-1 mu_k, c_k = -mu_k' S^-1 mu_k / 2.
    let weights = chol.solve(&mu.centers.transpose());
    let offsets: Vec<f64> = (0..k)
        .map(|c| -0.5 * mu.centers.row(c).transpose().dot(&weights.column(c)))
        .collect();
    let mut wrong = 0usize;
    for _ in 0..draws {
        let class = rng.random_range(0..k);
        let x = sampler.draw(class, rng);
        let scores = weights.tr_mul(&x);
        let mut best = 0;
        for c in 1..k {
            if scores[c] + offsets[c] > scores[best] + offsets[best] {
                best = c;
            }
        }
        if best != class {
            wrong += 1;
        }
    }
    let rate = wrong as f64 / draws as f64;
    Ok(Estimate {
        value: rate,
        std_error: (rate * (1.0 - rate) / draws as f64).sqrt(),
    })
}

/// Confusion counts of a predicted nonzero pattern against the true one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_patterns(truth: &[bool], predicted: &[bool]) -> Self {
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    /// True positive rate; 0 when there are no true nonzeros.
    pub fn tpr(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    /// Positive predictive value; 1 when nothing is predicted nonzero.
    pub fn ppv(&self) -> f64 {
        if self.tp + self.fp == 0 {
            1.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }
}

/// Nonzero pattern of the feature coefficients of a multinomial fit, `K x p` row-major.
pub fn coefficient_pattern(beta: &BlockVector, classes: usize) -> Vec<bool> {
    let p = beta.structure().num_blocks() - 1;
    (0..classes)
        .flat_map(|k| (0..p).map(move |j| beta.block(j + 1)[k] != 0.0))
        .collect()
}

/// Outcome of one replicate for one alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub alpha: f64,
    pub lambda_hat: f64,
    pub test_error: f64,
    pub bayes: f64,
    pub bayes_std_error: f64,
    /// Test error minus Bayes rate.
    pub z: f64,
    pub tpr: f64,
    pub ppv: f64,
    pub confusion: Confusion,
}

/// Mean, Monte Carlo standard error and central 95% band of a statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                lower: f64::NAN,
                upper: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            lower: quantile(&sorted, 0.025),
            upper: quantile(&sorted, 0.975),
        }
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSummary {
    pub alpha: f64,
    pub err: Summary,
    pub tpr: Summary,
    pub ppv: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub rows: Vec<ReplicateRow>,
    pub summaries: Vec<AlphaSummary>,
    /// Replicates dropped because a fit failed, with the error.
    pub failures: Vec<(usize, SglError)>,
}

impl SimResult {
    pub fn summary(&self, alpha: f64) -> Option<&AlphaSummary> {
        self.summaries.iter().find(|s| s.alpha == alpha)
    }
}

/// Solver settings sized for the study: a 20-point grid down to 0.05 lambda
/// max with inner tolerances loose enough to keep a full run to minutes.
pub fn study_solver() -> SolverConfig {
    SolverConfig {
        n_lambda: 20,
        lambda_min_ratio: 0.05,
        tol_middle: 1e-6,
        tol_inner: 1e-8,
        ..SolverConfig::default()
    }
}

/// Generator for one replicate: the master seed with the replicate index as stream.
pub fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Runs the simulation for every alpha in `alphas`. Replicates run on the
/// current rayon pool; the result does not depend on the number of workers.
pub fn run_study(config: &SimConfig, alphas: &[f64], solver: &SolverConfig) -> Result<SimResult> {
    config.validate()?;
    solver.validate()?;
    let outcomes: Vec<Result<Vec<ReplicateRow>>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, alphas, solver, r))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(mut v) => rows.append(&mut v),
            Err(e) => failures.push((r, e)),
        }
    }
    let summaries = alphas
        .iter()
        .map(|&alpha| {
            let pick = |f: fn(&ReplicateRow) -> f64| -> Vec<f64> {
                rows.iter().filter(|row| row.alpha == alpha).map(f).collect()
            };
            AlphaSummary {
                alpha,
                err: Summary::of(&pick(|r| r.z)),
                tpr: Summary::of(&pick(|r| r.tpr)),
                ppv: Summary::of(&pick(|r| r.ppv)),
            }
        })
        .collect();
    Ok(SimResult {
        rows,
        summaries,
        failures,
    })
}

/// Draws the centers and covariance of replicate `replicate`.
pub fn sample_configuration<R: Rng>(config: &SimConfig, rng: &mut R) -> Result<MuConfiguration> {
    let base = random_base_covariance(config.features(), rng);
    let covariance = build_covariance(&base, config.delta)?;
    Ok(MuConfiguration {
        centers: sample_centers(config, rng),
        covariance,
    })
}

fn run_replicate(config: &SimConfig, alphas: &[f64], solver: &SolverConfig, replicate: usize) -> Result<Vec<ReplicateRow>> {
    let mut rng = replicate_rng(config.seed, replicate);
    let mu = sample_configuration(config, &mut rng)?;
    let sampler = GaussianSampler::new(&mu)?;
    let train = sampler.dataset(config.per_class, &mut rng)?;
    let test = sampler.dataset(config.test_per_class, &mut rng)?;
    let bayes = bayes_rate(&mu, config.bayes_draws, &mut rng)?;
    let cv_seed = rng.random::<u64>();

    let p = config.features();
    let base = multinomial_penalty(p, config.classes, 0.5)?;
    let cv = cross_validate(&train, &base, alphas, solver, config.folds, cv_seed)?;
    let truth = mu.nonzero();
    Ok(cv
        .curves
        .iter()
        .map(|curve| {
            let best = curve.best_index();
            let beta = &curve.path.points[best].beta;
            let predicted = predict_classes(&test.x, beta, config.classes);
            let wrong = predicted.iter().zip(&test.y).filter(|(a, b)| a != b).count();
            let test_error = wrong as f64 / test.n_samples() as f64;
            let confusion = Confusion::from_patterns(&truth, &coefficient_pattern(beta, config.classes));
            ReplicateRow {
                replicate,
                alpha: curve.alpha,
                lambda_hat: curve.lambdas[best],
                test_error,
                bayes: bayes.value,
                bayes_std_error: bayes.std_error,
                z: test_error - bayes.value,
                tpr: confusion.tpr(),
                ppv: confusion.ppv(),
                confusion,
            }
        })
        .collect())
}

/// Balanced classification problem with `informative` class-dependent
/// features followed by pure noise: `x_ij ~ N(s_{y_i j}, 1)` with shifts
/// drawn from `[-1, 1]` for the informative columns and zero otherwise.
pub fn synthetic_dataset(samples: usize, features: usize, classes: usize, informative: usize, seed: u64) -> Result<Dataset> {
    if classes < 2 || samples < classes || features == 0 || informative > features {
        return Err(SglError::InvalidParameter(format!(
            "synthetic problem needs classes >= 2, samples >= classes, 0 < features and informative <= features \
             (got {samples} samples, {features} features, {classes} classes, {informative} informative)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shifts: Vec<f64> = (0..classes * informative).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<usize> = (0..samples).map(|i| i % classes).collect();
    let mut rows = Vec::with_capacity(samples * features);
    for &class in &y {
        for j in 0..features {
            let noise: f64 = rng.sample(StandardNormal);
            let shift = if j < informative { shifts[class * informative + j] } else { 0.0 };
            rows.push(noise + shift);
        }
    }
    Dataset::new(DesignMatrix::from_rows(samples, features, &rows)?, y, classes)
}
