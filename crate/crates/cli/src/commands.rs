//! The five commands. Each turns a validated [`RunConfig`] into records.

use std::time::Instant;

use sgl::loss::multinomial_structure;
use sgl::modelselect::cross_validate;
use sgl::preprocess::{normalize_rows, standardize_columns};
use sgl::simstudy::{run_study, synthetic_dataset, Summary};
use sgl::solver::{fit_path, lambda_max_for};
use sgl::{Dataset, FitPath, MultinomialLoss, PenaltySpec, SolverConfig};

use crate::config::{Command, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::ingest;
use crate::output::{coefficient_triplets, float, float_list, Record};

/// Records produced by a command, and the numeric failure that stopped it
/// early, if any. Records are kept on failure so partial paths are not lost.
#[derive(Debug)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub error: Option<CliError>,
}

/// Runs the configured command on the current rayon pool.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    let mut records = vec![echo(config)];
    let error = match config.command {
        Command::LambdaMax => lambda_max(config, &mut records),
        Command::Fit => fit(config, &mut records),
        Command::Cv => cv(config, &mut records),
        Command::Simulate => simulate(config, &mut records),
        Command::BenchScreen => bench_screen(config, &mut records),
    };
    match error {
        Err(e @ (CliError::Validation(_) | CliError::Input { .. } | CliError::Io { .. })) => Err(e),
        Err(e) => Ok(Outcome {
            records,
            error: Some(e),
        }),
        Ok(()) => Ok(Outcome { records, error: None }),
    }
}

fn echo(config: &RunConfig) -> Record {
    config
        .entries()
        .into_iter()
        .fold(Record::new("config").with("command", config.command.name()), |r, (k, v)| {
            r.with(k, v)
        })
}

/// Block weights from the configured policies; block 0 is the unpenalized intercept.
pub fn penalty(config: &RunConfig, features: usize, classes: usize, alpha: f64) -> Result<PenaltySpec> {
    let s = multinomial_structure(features, classes);
    let mut gamma = vec![config.gamma.weight(classes); features + 1];
    gamma[0] = 0.0;
    let mut xi = vec![config.xi.weight(classes); (features + 1) * classes];
    xi[..classes].fill(0.0);
    Ok(PenaltySpec::new(&s, alpha, gamma, xi)?)
}

/// Reads and preprocesses the input data, recording its shape and class names.
fn load(config: &RunConfig, records: &mut Vec<Record>) -> Result<Dataset> {
    let (Some(matrix), Some(labels)) = (&config.matrix, &config.labels) else {
        return Err(CliError::Validation("matrix and labels files are required".into()));
    };
    let input = ingest(matrix, labels, config.format)?;
    let mut x = input.data.x;
    if config.normalize_rows {
        x = normalize_rows(&x)?;
    }
    if config.standardize {
        x = standardize_columns(&x, config.center)?.0;
    }
    let data = Dataset::new(x, input.data.y, input.data.n_classes)?;
    records.push(
        Record::new("data")
            .with("samples", data.n_samples())
            .with("features", data.n_features())
            .with("classes", data.n_classes)
            .with("sparse", data.x.is_sparse()),
    );
    for (i, name) in input.class_names.iter().enumerate() {
        records.push(Record::new("class").with("index", i).with("label", name));
    }
    Ok(data)
}

fn lambda_max(config: &RunConfig, records: &mut Vec<Record>) -> Result<()> {
    let data = load(config, records)?;
    let loss = MultinomialLoss::new(&data);
    for &alpha in &config.alphas {
        let spec = penalty(config, data.n_features(), data.n_classes, alpha)?;
        let lmax = lambda_max_for(&loss, &spec, &config.solver)?;
        records.push(Record::new("lambda_max").with_f64("alpha", alpha).with_f64("lambda_max", lmax));
    }
    Ok(())
}

fn path_records(alpha: f64, path: &FitPath, spec: &PenaltySpec, records: &mut Vec<Record>) {
    records.push(
        Record::new("path")
            .with_f64("alpha", alpha)
            .with_f64("lambda_max", path.lambda_max)
            .with("points", path.points.len())
            .with("complete", path.is_complete()),
    );
    for (index, p) in path.points.iter().enumerate() {
        records.push(
            Record::new("point")
                .with_f64("alpha", alpha)
                .with("index", index)
                .with_f64("lambda", p.lambda)
                .with_f64("objective", p.objective)
                .with_f64("kkt_residual", p.kkt_residual)
                .with("theta_hat", p.theta_hat(spec))
                .with("pi_hat", p.pi_hat(spec))
                .with("outer_iterations", p.diagnostics.outer_iterations)
                .with("converged", p.diagnostics.converged)
                .with("stalled", p.diagnostics.stalled)
                .with("intercept", float_list(&p.intercept(spec)))
                .with("coefficients", coefficient_triplets(&p.beta, 1)),
        );
    }
    if let Some(f) = &path.failure {
        let last_kkt = path.points.last().map_or(f64::NAN, |p| p.kkt_residual);
        records.push(
            Record::new("failure")
                .with_f64("alpha", alpha)
                .with("lambda_index", f.lambda_index)
                .with_f64("lambda", path.lambdas[f.lambda_index])
                .with_f64("last_kkt_residual", last_kkt)
                .with("error", &f.error),
        );
    }
}

fn fit(config: &RunConfig, records: &mut Vec<Record>) -> Result<()> {
    let data = load(config, records)?;
    let loss = MultinomialLoss::new(&data);
    let mut first_error = None;
    for &alpha in &config.alphas {
        let spec = penalty(config, data.n_features(), data.n_classes, alpha)?;
        let path = fit_path(&loss, &spec, &config.solver)?;
        path_records(alpha, &path, &spec, records);
        if let (None, Some(f)) = (&first_error, &path.failure) {
            first_error = Some(f.error.clone());
        }
    }
    match first_error {
        Some(e) => Err(CliError::Numeric(e)),
        None => Ok(()),
    }
}

fn cv(config: &RunConfig, records: &mut Vec<Record>) -> Result<()> {
    let data = load(config, records)?;
    let base = penalty(config, data.n_features(), data.n_classes, 0.5)?;
    let result = cross_validate(&data, &base, &config.alphas, &config.solver, config.folds, config.seed)?;
    records.push(
        Record::new("folds")
            .with("count", config.folds)
            .with("assignment", result.folds.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(",")),
    );
    for curve in &result.curves {
        let best = curve.best_index();
        records.push(
            Record::new("cv_path")
                .with_f64("alpha", curve.alpha)
                .with_f64("lambda_max", curve.lambda_max)
                .with("best_index", best)
                .with_f64("best_lambda", curve.lambdas[best])
                .with_f64("best_error", curve.error[best]),
        );
        for i in 0..curve.lambdas.len() {
            let on_subsequence = curve.subsequence.iter().any(|s| s.index == i);
            records.push(
                Record::new("cv")
                    .with_f64("alpha", curve.alpha)
                    .with("index", i)
                    .with_f64("lambda", curve.lambdas[i])
                    .with_f64("error", curve.error[i])
                    .with_f64("std_error", curve.std_error[i])
                    .with("theta_hat", curve.theta_hat[i])
                    .with("pi_hat", curve.pi_hat[i])
                    .with("subsequence", on_subsequence),
            );
        }
    }
    Ok(())
}

fn summary(record: Record, prefix: &str, s: &Summary) -> Record {
    record
        .with(&format!("{prefix}_mean"), float(s.mean))
        .with(&format!("{prefix}_std_error"), float(s.std_error))
        .with(&format!("{prefix}_lower"), float(s.lower))
        .with(&format!("{prefix}_upper"), float(s.upper))
}

fn simulate(config: &RunConfig, records: &mut Vec<Record>) -> Result<()> {
    let sim = config.sim_config()?;
    let result = run_study(&sim, &config.alphas, &config.solver)?;
    for row in &result.rows {
        records.push(
            Record::new("replicate")
                .with("replicate", row.replicate)
                .with_f64("alpha", row.alpha)
                .with_f64("lambda_hat", row.lambda_hat)
                .with_f64("test_error", row.test_error)
                .with_f64("bayes", row.bayes)
                .with_f64("bayes_std_error", row.bayes_std_error)
                .with_f64("z", row.z)
                .with_f64("tpr", row.tpr)
                .with_f64("ppv", row.ppv)
                .with("tp", row.confusion.tp)
                .with("fp", row.confusion.fp)
                .with("fn", row.confusion.fn_)
                .with("tn", row.confusion.tn),
        );
    }
    for s in &result.summaries {
        let r = Record::new("summary").with_f64("alpha", s.alpha);
        records.push(summary(summary(summary(r, "err", &s.err), "tpr", &s.tpr), "ppv", &s.ppv));
    }
    for (replicate, error) in &result.failures {
        records.push(Record::new("failure").with("replicate", replicate).with("error", error));
    }
    if !result.failures.is_empty() {
        eprintln!(
            "warning: {} of {} replicates failed and were excluded",
            result.failures.len(),
            sim.replicates
        );
    }
    Ok(())
}

fn bench_screen(config: &RunConfig, records: &mut Vec<Record>) -> Result<()> {
    let data = if config.matrix.is_some() {
        load(config, records)?
    } else {
        let k = config.classes.unwrap_or(3);
        let d = synthetic_dataset(config.samples, config.features, k, config.informative, config.seed)?;
        records.push(
            Record::new("data")
                .with("samples", d.n_samples())
                .with("features", d.n_features())
                .with("classes", d.n_classes)
                .with("synthetic", true),
        );
        d
    };
    let loss = MultinomialLoss::new(&data);
    for &alpha in &config.alphas {
        let spec = penalty(config, data.n_features(), data.n_classes, alpha)?;
        let timed = |use_hessian_bound: bool| -> Result<(FitPath, f64)> {
            let solver = SolverConfig {
                use_hessian_bound,
                verify_screening: false,
                ..config.solver.clone()
            };
            let start = Instant::now();
            let path = fit_path(&loss, &spec, &solver)?.into_result()?;
            Ok((path, start.elapsed().as_secs_f64()))
        };
        // The first run follows the `screening` setting so that switching it
        // off gives a baseline comparison of two plain fits.
        let (on, seconds_on) = timed(config.solver.use_hessian_bound)?;
        let (off, seconds_off) = timed(false)?;

        let difference = on
            .points
            .iter()
            .zip(&off.points)
            .flat_map(|(a, b)| a.beta.values().iter().zip(b.beta.values()).map(|(x, y)| (x - y).abs()))
            .fold(0.0f64, f64::max);
        let screened: usize = on.points.iter().map(|p| p.diagnostics.middle.screened).sum();
        let computed: usize = on.points.iter().map(|p| p.diagnostics.middle.block_gradients).sum();
        let visits = screened + computed;
        let violations = if config.solver.verify_screening {
            let solver = SolverConfig {
                verify_screening: true,
                ..config.solver.clone()
            };
            let checked = fit_path(&loss, &spec, &solver)?.into_result()?;
            Some(checked.points.iter().map(|p| p.diagnostics.middle.screening_violations).sum::<usize>())
        } else {
            None
        };
        let mut record = Record::new("bench")
            .with_f64("alpha", alpha)
            .with("lambdas", on.points.len())
            .with_f64("seconds_on", seconds_on)
            .with_f64("seconds_off", seconds_off)
            .with_f64("ratio", seconds_off / seconds_on)
            .with("screened", screened)
            .with("block_visits", visits)
            .with_f64("screened_fraction", if visits == 0 { 0.0 } else { screened as f64 / visits as f64 })
            .with_f64("max_difference", difference);
        if let Some(v) = violations {
            record = record.with("violations", v);
        }
        records.push(record);
        if difference > 1e-8 {
            return Err(CliError::ScreeningMismatch { alpha, difference });
        }
        if let Some(v) = violations.filter(|&v| v > 0) {
            return Err(CliError::ScreeningViolation(v));
        }
    }
    Ok(())
}
