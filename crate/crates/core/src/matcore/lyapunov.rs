//! Continuous Lyapunov equation `P X + X P = B` for SPD `P`.
//!
//! In the eigenbasis `P = U diag(lambda) U^T` the operator is diagonal:
//! `X~_ij = B~_ij / (lambda_i + lambda_j)` with `B~ = U^T B U`. This is the
//! closed form of `X = int_0^inf exp(-tP) B exp(-tP) dt`.

use super::{tol, Matrix, Skew, Spd, Symmetric};
use crate::error::{Error, Result};

fn check_conditioning(p: &Spd) -> Result<()> {
    let threshold = tol::SPD_REL * p.lambda_max();
    let lambda_min = p.lambda_min();
    if !(lambda_min >= threshold) {
        return Err(Error::LyapunovConditioning { lambda_min, threshold });
    }
    Ok(())
}

/// Solves `P X + X P = B` for square `B` of the same size as `P`.
pub fn solve_lyapunov(p: &Spd, b: &Matrix) -> Result<Matrix> {
    super::expect_shape(b, p.dim(), p.dim())?;
    super::check_finite(b)?;
    check_conditioning(p)?;
    let spec = p.spectrum();
    let u = spec.vectors.as_matrix();
    let lambda = &spec.values;
    let mut x = u.transpose() * b * u;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            x[(i, j)] /= lambda[i] + lambda[j];
        }
    }
    Ok(u * x * u.transpose())
}

/// Symmetric right-hand side gives a symmetric solution.
pub fn solve_lyapunov_sym(p: &Spd, b: &Symmetric) -> Result<Symmetric> {
    solve_lyapunov(p, b.as_matrix()).map(|x| Symmetric::symmetrize(&x))
}

/// Skew right-hand side gives a skew solution.
pub fn solve_lyapunov_skew(p: &Spd, b: &Skew) -> Result<Skew> {
    solve_lyapunov(p, b.as_matrix()).map(|x| Skew::skew_part(&x))
}
