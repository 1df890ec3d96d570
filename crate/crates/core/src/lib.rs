//! Trimmed regularized M-estimators.
//!
//! Sparse least trimmed squares, trimmed logistic lasso, trimmed graphical
//! lasso and trace-norm trimmed regression, all fitted by a proximal
//! gradient method in which the sample weights are eliminated by partial
//! minimization. Also included: a brute-force subset oracle for small
//! instances, simulation generators and metrics, and calculators for the
//! theoretical tuning parameters and error bounds.

pub mod error;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod trim;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{Dataset, LossKind, LossModel, ParamKind, Parameter, RegKind, Regularizer};
pub use solver::{fit_alternate_min, fit_partial_min, FitResult, SolverConfig};
pub use trim::{is_weight_optimal, solve_weights, TrimWeights};
pub mod estimator;
pub mod oracle;
pub mod io;
pub mod sim;
pub mod theory;
pub mod cli;
