//! Comparison models: ordinary least squares, an RBF least-squares SVM and
//! standard tree GP.

use thiserror::Error;

use crate::dataset::DatasetError;

pub mod linalg;
pub mod lssvm;
pub mod ols;
pub mod stgp;

pub use lssvm::{grid_search, lssvm_fit, lssvm_predict, GridSearchResult, LssvmModel};
pub use ols::{ols_fit, ols_predict, LinearModel};
pub use stgp::{stgp_run, StgpConfig, StgpRun};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("linear system is singular or numerically singular")]
    Singular,
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("training data has no slump column")]
    MissingTargets,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
