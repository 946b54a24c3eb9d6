//! Problem fixtures shared by the benchmarks.

use sgl::loss::multinomial_penalty;
use sgl::simstudy::synthetic_dataset;
use sgl::{Dataset, PenaltySpec, SolverConfig};

/// A benchmark instance: data, penalty and solver settings.
pub struct Problem {
    pub data: Dataset,
    pub spec: PenaltySpec,
    pub config: SolverConfig,
}

/// Synthetic multiclass problem with `features` blocks, of which 10 are informative.
pub fn problem(samples: usize, features: usize, classes: usize, alpha: f64, seed: u64) -> Problem {
    let data = synthetic_dataset(samples, features, classes, 10.min(features), seed).expect("valid sizes");
    let spec = multinomial_penalty(features, classes, alpha).expect("valid alpha");
    let config = SolverConfig {
        n_lambda: 20,
        lambda_min_ratio: 0.1,
        ..SolverConfig::default()
    };
    Problem { data, spec, config }
}

/// The same settings with screening switched on or off.
pub fn with_screening(config: &SolverConfig, on: bool) -> SolverConfig {
    SolverConfig {
        use_hessian_bound: on,
        ..config.clone()
    }
}
