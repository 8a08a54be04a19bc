//! Sparse principal component estimation by exact mixed-integer sparse
//! regression.
//!
//! The pipeline: draw (or load) data from a spiked covariance model, solve a
//! cardinality-constrained sparse least-squares problem by outer approximation
//! with an exact branch-and-bound master, then turn the fitted regression
//! coefficients into a unit-norm principal component estimate. Reference
//! methods (truncated power iteration, covariance thresholding) and a seeded
//! experiment harness live alongside.

pub mod baselines;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod master;
pub mod model;
pub mod outer;
pub mod qp;

pub use error::{Result, SpcaError};
