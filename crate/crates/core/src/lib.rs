//! Entropy of orthogonal matrices.
//!
//! The squared entries of each row of an orthogonal matrix form a probability
//! distribution; summing the row entropies gives a smooth-ish function on
//! O(n) bounded by `n ln n`, with the bound reached exactly at rescaled
//! Hadamard matrices. This crate evaluates that entropy and its Rényi-type
//! relatives, ascends it on O(n), and classifies the critical points found.

pub mod cli;
pub mod critical;
pub mod entropy;
pub mod error;
pub mod manifold;
pub mod matrix;
pub mod numfmt;
pub mod report;
pub mod search;

pub use critical::{
    classify_critical_point, riemannian_hessian, Classification, CriticalPointRecord,
};
pub use entropy::{
    entropy_bound, euclidean_gradient, renyi_power_sum, shannon_entropy, stationarity_residual,
    EntropyReport,
};
pub use error::{Error, Result};
pub use manifold::{maximize_entropy, retract, tangent_project, OptimizerConfig, RunReport};
pub use matrix::{
    canonical_fingerprint, family_matrix, haar_random_orthogonal, load_matrix,
    orthogonality_defect, sylvester_hadamard, OrthogonalMatrix, SquareMatrix,
};
pub use search::{multistart_search, Catalog};
