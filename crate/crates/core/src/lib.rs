//! Brownian motion and mean-curvature drifts on matrix homogeneous spaces.
//!
//! The model case is the submersion `M -> M M^T` from full-rank `n x k`
//! matrices onto rank-`k` positive semidefinite matrices, under the
//! Frobenius metric or the right-invariant `tr(R V W^T)` family.

// `!(x > tol)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod control;
pub mod error;
pub mod geom;
pub mod matcore;
pub mod processes;
pub mod sde;

pub use error::{Error, Result};
pub use matcore::Matrix;
