//! Outlier detection with autoencoders trained on an MSE loss augmented by a
//! covariance-eigenvalue gap penalty ("MSE-eig").
//!
//! The penalty keeps the autoencoder from reconstructing its training data
//! completely: each of the `l` leading principal directions is shrunk by a
//! fixed amount `β` in standard-deviation units, which makes the per-point
//! reconstruction error track the Mahalanobis distance. Far-from-center
//! (high-leverage) points then score as outliers alongside off-manifold
//! (influential) ones.
//!
//! Modules, bottom-up:
//! * [`linalg`]: matrices, covariance, Jacobi eigensolver, Cholesky, Mahalanobis.
//! * [`network`]: the one-hidden-layer autoencoder and Adam.
//! * [`loss`]: MSE, the eigenvalue-gap penalty, β selection.
//! * [`data`]: generators, normalization, labeling, CSV.
//! * [`detect`]: training, scoring, directional statistics.
//! * [`eval`]: AUC, experiment suites, reports and plots.

pub mod data;
pub mod detect;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod loss;
pub mod network;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
