//! Low rank approximation of third order symmetric tensors with global
//! optimality certificates.
//!
//! The pipeline: a symmetric tensor is identified with a truncated moment
//! sequence on the unit sphere, the best rank-r approximation problem is
//! relaxed to a rank constrained matrix optimization over moment matrices,
//! solved by a DC algorithm with an sGS-ADMM inner loop, and the result is
//! certified against the explicit Lagrangian dual: either as a best rank-r
//! approximation or as an α-quasi-optimal one, with a full diagnostic
//! ledger when certification fails.
//!
//! Modules:
//! - [`tensor`]: symmetric tensor storage, norms, flattening, spectral radius
//! - [`moments`]: graded index sets, moment/localizing matrices, atom extraction
//! - [`lowrank`]: truncated-SVD projection, Ky-Fan norms, soft-thresholding
//! - [`solver`]: penalized DCA + sGS-ADMM for the primal relaxation
//! - [`certify`]: dual feasibility, optimality gates, quasi-optimality bounds
//! - [`oracle`]: brute-force baselines for desk-scale validation

pub mod certify;
pub mod error;
mod idx;
pub mod lowrank;
pub mod moments;
pub mod oracle;
pub mod solver;
pub mod tensor;

pub use error::Error;
pub use tensor::{Atom, AtomicMeasure, Flattening, SymTensor3};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
