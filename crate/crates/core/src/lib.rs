//! Sparse group lasso for general convex losses.
//!
//! Minimizes `f(beta) + lambda Phi(beta)` where `Phi` mixes a weighted group
//! norm over parameter blocks with a weighted L1 norm, along a decreasing
//! lambda path. The main application is multinomial classification, with one
//! block per feature holding its coefficients for all classes.
//!
//! ```no_run
//! use sgl::design::{Dataset, DesignMatrix};
//! use sgl::loss::{multinomial_penalty, MultinomialLoss};
//! use sgl::solver::{fit_path, SolverConfig};
//!
//! let x = DesignMatrix::from_rows(4, 2, &[1.0, 0.0, 0.9, 0.1, 0.0, 1.0, 0.1, 0.8]).unwrap();
//! let data = Dataset::new(x, vec![0, 0, 1, 1], 2).unwrap();
//! let loss = MultinomialLoss::new(&data);
//! let spec = multinomial_penalty(2, 2, 0.5).unwrap();
//! let path = fit_path(&loss, &spec, &SolverConfig::default()).unwrap();
//! println!("lambda max = {}", path.lambda_max);
//! ```

pub mod blocks;
pub mod design;
pub mod error;
pub mod loss;
pub mod modelselect;
pub mod penalty;
pub mod preprocess;
pub mod simstudy;
pub mod solver;

pub use blocks::{BlockStructure, BlockVector, PenaltySpec};
pub use design::{Dataset, DesignMatrix};
pub use error::{Result, SglError};
pub use loss::{LossModel, MultinomialLoss, QuadraticLoss};
pub use solver::{fit_path, FitPath, SolverConfig};
