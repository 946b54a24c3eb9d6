//! Run configuration: command-specific defaults, overridden by a flat
//! `key = value` file, overridden by command line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sgl::simstudy::{self, SimConfig};
use sgl::SolverConfig;

use crate::error::{CliError, Result};
use crate::output::{float, float_list};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    LambdaMax,
    Fit,
    Cv,
    Simulate,
    BenchScreen,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LambdaMax => "lambda-max",
            Command::Fit => "fit",
            Command::Cv => "cv",
            Command::Simulate => "simulate",
            Command::BenchScreen => "bench-screen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// Sparse if the first line is a `rows cols nnz` header, dense otherwise.
    Auto,
    Dense,
    Sparse,
}

impl FromStr for MatrixFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "dense" => Ok(Self::Dense),
            "sparse" => Ok(Self::Sparse),
            _ => Err(format!("unknown format '{s}' (expected auto, dense or sparse)")),
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Dense => "dense",
            Self::Sparse => "sparse",
        })
    }
}

/// How block (`gamma`) or coordinate (`xi`) weights of penalized blocks are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightPolicy {
    /// Square root of the block dimension (the number of classes).
    SqrtDim,
    Constant(f64),
}

impl FromStr for WeightPolicy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "sqrt-dim" {
            return Ok(Self::SqrtDim);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(Self::Constant(v)),
            _ => Err(format!("invalid weight '{s}' (expected sqrt-dim or a non-negative number)")),
        }
    }
}

impl fmt::Display for WeightPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SqrtDim => f.write_str("sqrt-dim"),
            Self::Constant(v) => f.write_str(&float(*v)),
        }
    }
}

impl WeightPolicy {
    pub fn weight(self, dim: usize) -> f64 {
        match self {
            Self::SqrtDim => (dim as f64).sqrt(),
            Self::Constant(v) => v,
        }
    }
}

/// Every configuration key, in echo order.
pub const KEYS: &[&str] = &[
    "matrix",
    "labels",
    "format",
    "normalize_rows",
    "standardize",
    "center",
    "alpha",
    "gamma",
    "xi",
    "n_lambda",
    "lambda_min_ratio",
    "lambdas",
    "tol_outer",
    "tol_objective",
    "tol_middle",
    "tol_inner",
    "max_outer",
    "max_middle",
    "max_inner",
    "armijo_a",
    "armijo_b",
    "armijo_min_step",
    "inner_epsilon",
    "screening",
    "diagonal_hessian",
    "verify_screening",
    "folds",
    "seed",
    "workers",
    "output",
    "preset",
    "replicates",
    "per_class",
    "classes",
    "p_a",
    "p_b",
    "delta",
    "test_per_class",
    "bayes_draws",
    "samples",
    "features",
    "informative",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub matrix: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub format: MatrixFormat,
    pub normalize_rows: bool,
    pub standardize: bool,
    pub center: bool,
    pub alphas: Vec<f64>,
    pub gamma: WeightPolicy,
    pub xi: WeightPolicy,
    pub solver: SolverConfig,
    pub folds: usize,
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    /// Output file; standard output when unset.
    pub output: Option<PathBuf>,
    /// Simulation preset; the fields below override its values.
    pub preset: String,
    pub replicates: Option<usize>,
    pub per_class: Option<usize>,
    pub classes: Option<usize>,
    pub p_a: Option<usize>,
    pub p_b: Option<usize>,
    pub delta: Option<f64>,
    pub test_per_class: Option<usize>,
    pub bayes_draws: Option<usize>,
    /// Synthetic problem size for bench-screen when no matrix is given.
    pub samples: usize,
    pub features: usize,
    pub informative: usize,
}

const ALPHA_SWEEP: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let solver = match command {
            Command::Simulate => simstudy::study_solver(),
            Command::BenchScreen => SolverConfig {
                n_lambda: 20,
                lambda_min_ratio: 0.1,
                ..SolverConfig::default()
            },
            _ => SolverConfig::default(),
        };
        let alphas = match command {
            Command::Cv | Command::Simulate => ALPHA_SWEEP.to_vec(),
            _ => vec![0.5],
        };
        Self {
            command,
            matrix: None,
            labels: None,
            format: MatrixFormat::Auto,
            normalize_rows: false,
            standardize: false,
            center: false,
            alphas,
            gamma: WeightPolicy::SqrtDim,
            xi: WeightPolicy::Constant(1.0),
            solver,
            folds: 10,
            seed: 1,
            workers: 0,
            output: None,
            preset: "thin".to_string(),
            replicates: None,
            per_class: None,
            classes: None,
            p_a: None,
            p_b: None,
            delta: None,
            test_per_class: None,
            bayes_draws: None,
            samples: 100,
            features: 2000,
            informative: 20,
        }
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let s = &mut self.solver;
        match key {
            "matrix" => self.matrix = Some(PathBuf::from(value)),
            "labels" => self.labels = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "normalize_rows" => self.normalize_rows = parse_bool(value)?,
            "standardize" => self.standardize = parse_bool(value)?,
            "center" => self.center = parse_bool(value)?,
            "alpha" => self.alphas = parse_list(value)?,
            "gamma" => self.gamma = value.parse()?,
            "xi" => self.xi = value.parse()?,
            "n_lambda" => s.n_lambda = parse(value)?,
            "lambda_min_ratio" => s.lambda_min_ratio = parse(value)?,
            "lambdas" => s.lambdas = if value.is_empty() { None } else { Some(parse_list(value)?) },
            "tol_outer" => s.tol_outer = parse(value)?,
            "tol_objective" => s.tol_objective = parse(value)?,
            "tol_middle" => s.tol_middle = parse(value)?,
            "tol_inner" => s.tol_inner = parse(value)?,
            "max_outer" => s.max_outer = parse(value)?,
            "max_middle" => s.max_middle = parse(value)?,
            "max_inner" => s.max_inner = parse(value)?,
            "armijo_a" => s.armijo_a = parse(value)?,
            "armijo_b" => s.armijo_b = parse(value)?,
            "armijo_min_step" => s.armijo_min_step = parse(value)?,
            "inner_epsilon" => s.inner_epsilon = parse(value)?,
            "screening" => s.use_hessian_bound = parse_bool(value)?,
            "diagonal_hessian" => s.use_diagonal_hessian = parse_bool(value)?,
            "verify_screening" => s.verify_screening = parse_bool(value)?,
            "folds" => self.folds = parse(value)?,
            "seed" => self.seed = parse(value)?,
            "workers" => self.workers = parse(value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "preset" => self.preset = value.to_string(),
            "replicates" => self.replicates = Some(parse(value)?),
            "per_class" => self.per_class = Some(parse(value)?),
            "classes" => self.classes = Some(parse(value)?),
            "p_a" => self.p_a = Some(parse(value)?),
            "p_b" => self.p_b = Some(parse(value)?),
            "delta" => self.delta = Some(parse(value)?),
            "test_per_class" => self.test_per_class = Some(parse(value)?),
            "bayes_draws" => self.bayes_draws = Some(parse(value)?),
            "samples" => self.samples = parse(value)?,
            "features" => self.features = parse(value)?,
            "informative" => self.informative = parse(value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and lines starting with `#` are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |message: String| CliError::Input {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(format!("expected 'key = value', got '{line}'")))?;
            self.set(key.trim(), value.trim()).map_err(fail)?;
        }
        Ok(())
    }

    /// Simulation settings: the preset with any explicit overrides.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let mut c = SimConfig::preset(&self.preset)?;
        c.seed = self.seed;
        c.folds = self.folds;
        if let Some(v) = self.replicates {
            c.replicates = v;
        }
        if let Some(v) = self.per_class {
            c.per_class = v;
        }
        if let Some(v) = self.classes {
            c.classes = v;
        }
        if let Some(v) = self.p_a {
            c.p_a = v;
        }
        if let Some(v) = self.p_b {
            c.p_b = v;
        }
        if let Some(v) = self.delta {
            c.delta = v;
        }
        if let Some(v) = self.test_per_class {
            c.test_per_class = v;
        }
        if let Some(v) = self.bayes_draws {
            c.bayes_draws = v;
        }
        Ok(c)
    }

    /// Checks everything the command needs before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.alphas.is_empty() {
            return bad("alpha list is empty".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return bad(format!("alpha {a} outside [0, 1]"));
        }
        self.solver.validate()?;
        if self.center && !self.standardize {
            return bad("center requires standardize".into());
        }
        let needs_data = matches!(self.command, Command::LambdaMax | Command::Fit | Command::Cv);
        let has_data = self.matrix.is_some() || self.labels.is_some();
        if needs_data || has_data {
            if self.matrix.is_none() {
                return bad(format!("{} needs a matrix file", self.command.name()));
            }
            if self.labels.is_none() {
                return bad(format!("{} needs a labels file", self.command.name()));
            }
        }
        match self.command {
            Command::Cv if self.folds < 2 => bad("folds must be at least 2".into()),
            Command::Simulate => {
                self.sim_config()?.validate()?;
                Ok(())
            }
            Command::BenchScreen if !has_data => {
                let k = self.classes.unwrap_or(3);
                if k < 2 || self.samples < k || self.features == 0 || self.informative > self.features {
                    return bad(format!(
                        "synthetic problem needs classes >= 2, samples >= classes and informative <= features \
                         (got {} samples, {} features, {k} classes, {} informative)",
                        self.samples, self.features, self.informative
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `(key, value)` pairs for every key, in the text form `set` accepts.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.solver;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let opt = |v: Option<String>| v.unwrap_or_default();
        let sim = self.sim_config().ok();
        let from_sim = |f: fn(&SimConfig) -> String| sim.as_ref().map(f).unwrap_or_default();
        KEYS.iter()
            .map(|&key| {
                let value = match key {
                    "matrix" => path(&self.matrix),
                    "labels" => path(&self.labels),
                    "format" => self.format.to_string(),
                    "normalize_rows" => self.normalize_rows.to_string(),
                    "standardize" => self.standardize.to_string(),
                    "center" => self.center.to_string(),
                    "alpha" => float_list(&self.alphas),
                    "gamma" => self.gamma.to_string(),
                    "xi" => self.xi.to_string(),
                    "n_lambda" => s.n_lambda.to_string(),
                    "lambda_min_ratio" => float(s.lambda_min_ratio),
                    "lambdas" => opt(s.lambdas.as_deref().map(float_list)),
                    "tol_outer" => float(s.tol_outer),
                    "tol_objective" => float(s.tol_objective),
                    "tol_middle" => float(s.tol_middle),
                    "tol_inner" => float(s.tol_inner),
                    "max_outer" => s.max_outer.to_string(),
                    "max_middle" => s.max_middle.to_string(),
                    "max_inner" => s.max_inner.to_string(),
                    "armijo_a" => float(s.armijo_a),
                    "armijo_b" => float(s.armijo_b),
                    "armijo_min_step" => float(s.armijo_min_step),
                    "inner_epsilon" => float(s.inner_epsilon),
                    "screening" => s.use_hessian_bound.to_string(),
                    "diagonal_hessian" => s.use_diagonal_hessian.to_string(),
                    "verify_screening" => s.verify_screening.to_string(),
                    "folds" => self.folds.to_string(),
                    "seed" => self.seed.to_string(),
                    "workers" => self.workers.to_string(),
                    "output" => path(&self.output),
                    "preset" => self.preset.clone(),
                    "replicates" => from_sim(|c| c.replicates.to_string()),
                    "per_class" => from_sim(|c| c.per_class.to_string()),
                    "classes" => match self.command {
                        Command::Simulate => from_sim(|c| c.classes.to_string()),
                        _ => opt(self.classes.map(|k| k.to_string())),
                    },
                    "p_a" => from_sim(|c| c.p_a.to_string()),
                    "p_b" => from_sim(|c| c.p_b.to_string()),
                    "delta" => from_sim(|c| float(c.delta)),
                    "test_per_class" => from_sim(|c| c.test_per_class.to_string()),
                    "bayes_draws" => from_sim(|c| c.bayes_draws.to_string()),
                    "samples" => self.samples.to_string(),
                    "features" => self.features.to_string(),
                    "informative" => self.informative.to_string(),
                    _ => unreachable!("key list and echo out of sync: {key}"),
                };
                (key, value)
            })
            .collect()
    }
}

fn parse<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse '{value}'"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got '{value}'")),
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value.split(',').map(|v| parse(v.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips_through_the_echo() {
        for command in [Command::Fit, Command::Simulate, Command::BenchScreen] {
            let mut c = RunConfig::defaults(command);
            c.set("matrix", "x.csv").unwrap();
            c.set("lambdas", "3,2,1").unwrap();
            c.set("classes", "4").unwrap();
            let mut copy = RunConfig::defaults(command);
            for (key, value) in c.entries() {
                if !value.is_empty() {
                    copy.set(key, &value).unwrap();
                }
            }
            assert_eq!(copy.entries(), c.entries());
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut c = RunConfig::defaults(Command::Fit);
        assert!(c.set("lambda", "1").unwrap_err().contains("unknown key"));
        assert!(c.set("screening", "maybe").is_err());
        assert!(c.set("gamma", "-1").is_err());
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nalpha = 0.3\n\nbogus = 1\n").unwrap();
        let mut c = RunConfig::defaults(Command::Fit);
        let err = c.apply_file(&path).unwrap_err();
        assert!(matches!(err, CliError::Input { line: 4, .. }), "{err}");
        assert_eq!(c.alphas, vec![0.3]);
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = RunConfig::defaults(Command::Fit);
        assert!(c.validate().is_err());
        c.set("matrix", "x").unwrap();
        c.set("labels", "y").unwrap();
        c.validate().unwrap();
        c.set("alpha", "1.5").unwrap();
        assert!(c.validate().is_err());
        let mut s = RunConfig::defaults(Command::Simulate);
        s.validate().unwrap();
        s.set("preset", "medium").unwrap();
        assert!(s.validate().unwrap_err().to_string().contains("thin"));
    }
}
