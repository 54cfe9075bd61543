//! Geometric semantic genetic programming for predicting the slump of
//! recycled-aggregate concrete, with linear, tree-GP and LS-SVM baselines and
//! the statistics used to compare them.

pub mod baselines;
pub mod dataset;
pub mod experiment;
pub mod expr;
pub mod fmt;
pub mod gsgp;
pub mod stats;
