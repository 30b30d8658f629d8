//! Dense real linear algebra substrate.
//!
//! Everything is stored as `nalgebra::DMatrix<f64>`; the newtypes in this
//! module only add checked invariants (symmetry, skewness, positivity,
//! orthogonality) on top of the raw storage.

mod basis;
pub use basis::pairs;
mod eigen;
mod expm;
mod fd;
mod lyapunov;
pub mod sample;

pub use basis::{LieBasis, LieBasisKind};
pub use eigen::{eigh, Spectrum};
pub use expm::expm;
pub use fd::{default_fd_step, fd_gradient};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_skew, solve_lyapunov_sym};

use crate::error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Relative floor on `lambda_min / lambda_max` for an SPD matrix.
    pub const SPD_REL: f64 = 1e-10;
    pub const ORTH: f64 = 1e-8;
    pub const EIG: f64 = 1e-10;
    pub const LYAP: f64 = 1e-10;
    /// Relative floor on `sigma_min / sigma_max` for a full-rank base point.
    pub const RANK_REL: f64 = 1e-8;
    pub const PROJ: f64 = 1e-10;
    /// Accepted asymmetry when wrapping an existing matrix as symmetric.
    pub(crate) const SYM_INPUT: f64 = 1e-9;
}

pub fn check_finite(m: &Matrix) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

fn check_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape {
            expected: "non-empty square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn shape_str(m: &Matrix) -> String {
    format!("{}x{}", m.nrows(), m.ncols())
}

pub(crate) fn expect_shape(m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Shape {
            expected: format!("{rows}x{cols}"),
            got: shape_str(m),
        });
    }
    Ok(())
}

/// `E_ab`: the `rows x cols` matrix with a single one at `(a, b)`.
pub fn unit(rows: usize, cols: usize, a: usize, b: usize) -> Matrix {
    let mut e = Matrix::zeros(rows, cols);
    e[(a, b)] = 1.0;
    e
}

/// `A_ij = E_ij - E_ji`, unnormalized.
pub fn elementary_skew(n: usize, i: usize, j: usize) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    a[(i, j)] = 1.0;
    a[(j, i)] = -1.0;
    a
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Square matrix stored exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetric(Matrix);

impl Symmetric {
    /// Wraps a matrix that is already symmetric up to rounding noise and
    /// stores its symmetrization.
    pub fn new(m: Matrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let asym = (&m - m.transpose()).norm();
        if asym > tol::SYM_INPUT * (1.0 + m.norm()) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::symmetrize(&m))
    }

    /// `(A + A^T) / 2`, for any square `A`.
    pub fn symmetrize(m: &Matrix) -> Self {
        Symmetric((m + m.transpose()) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Symmetric(Matrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Symmetric(Matrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Symmetric(Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

/// Square matrix stored exactly skew-symmetric (`A + A^T == 0` bitwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Skew(Matrix);

impl Skew {
    pub fn new(m: Matrix) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let res = (&m + m.transpose()).norm();
        if res > tol::SYM_INPUT * (1.0 + m.norm()) {
            return Err(Error::NotSkew { residual: res });
        }
        Ok(Self::skew_part(&m))
    }

    /// `(A - A^T) / 2`, for any square `A`.
    pub fn skew_part(m: &Matrix) -> Self {
        Skew((m - m.transpose()) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        Skew(Matrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Symmetric positive definite matrix with its spectrum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Spd {
    sym: Symmetric,
    spectrum: Spectrum,
}

impl Spd {
    pub fn new(m: Matrix) -> Result<Self> {
        Self::from_symmetric(Symmetric::new(m)?)
    }

    pub fn from_symmetric(sym: Symmetric) -> Result<Self> {
        let spectrum = eigh(&sym)?;
        let lmax = spectrum.values[0];
        let lmin = spectrum.min();
        let threshold = tol::SPD_REL * lmax.abs();
        if !(lmin > threshold) || lmax <= 0.0 {
            return Err(Error::NotPositiveDefinite { lambda_min: lmin, threshold });
        }
        Ok(Spd { sym, spectrum })
    }

    pub fn identity(n: usize) -> Self {
        Spd::from_diagonal(&vec![1.0; n]).expect("identity is SPD")
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Spd::from_symmetric(Symmetric::from_diagonal(d))
    }

    /// `M M^T`; fails if the product is not numerically positive definite.
    pub fn gram_of(m: &Matrix) -> Result<Self> {
        Spd::from_symmetric(Symmetric::symmetrize(&(m * m.transpose())))
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn as_matrix(&self) -> &Matrix {
        self.sym.as_matrix()
    }

    pub fn as_symmetric(&self) -> &Symmetric {
        &self.sym
    }

    pub fn into_matrix(self) -> Matrix {
        self.sym.into_matrix()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn lambda_min(&self) -> f64 {
        self.spectrum.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectrum.values[0]
    }

    /// Builds `f(P)` from the cached spectrum; `f` must map positives to
    /// positives.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Spd {
        let spectrum = self.spectrum.mapped(f);
        let sym = spectrum.reconstruct();
        Spd { sym, spectrum }
    }

    /// Symmetric square root `P^{1/2}`.
    pub fn sqrt(&self) -> Spd {
        self.apply(f64::sqrt)
    }

    pub fn inverse(&self) -> Spd {
        self.apply(f64::recip)
    }

    pub fn inv_sqrt(&self) -> Spd {
        self.apply(|v| v.sqrt().recip())
    }

    pub fn log_det(&self) -> f64 {
        self.spectrum.values.iter().map(|v| v.ln()).sum()
    }

    pub fn condition(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }
}

/// Square matrix with `||Q^T Q - I||_F <= tol::ORTH`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orthogonal(Matrix);

impl Orthogonal {
    pub fn new(m: Matrix) -> Result<Self> {
        let n = check_square(&m)?;
        check_finite(&m)?;
        let res = orthogonality_defect(&m);
        if res > tol::ORTH {
            return Err(Error::NotOrthogonal { residual: res });
        }
        debug_assert_eq!(m.nrows(), n);
        Ok(Orthogonal(m))
    }

    pub fn identity(n: usize) -> Self {
        Orthogonal(Matrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// `||Q^T Q - I||_F` for any `n x k` matrix (column orthonormality defect).
pub fn orthogonality_defect(q: &Matrix) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - Matrix::identity(k, k)).norm()
}

/// Smallest and largest singular values.
pub fn singular_extremes(m: &Matrix) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// Fails unless `m` (n x k, k <= n) has full column rank relative to
/// `tol::RANK_REL * sigma_max`.
pub fn check_full_rank(m: &Matrix) -> Result<()> {
    check_finite(m)?;
    if m.ncols() > m.nrows() || m.ncols() == 0 {
        return Err(Error::Shape {
            expected: "n x k with 1 <= k <= n".into(),
            got: shape_str(m),
        });
    }
    let (smin, smax) = singular_extremes(m);
    let threshold = tol::RANK_REL * smax;
    if !(smin > threshold) {
        return Err(Error::RankDeficient { sigma_min: smin, threshold });
    }
    Ok(())
}

/// `I_{k,n}` as an `n x k` column-truncation matrix.
pub fn truncation(n: usize, k: usize) -> Matrix {
    Matrix::from_fn(n, k, |r, c| if r == c { 1.0 } else { 0.0 })
}

/// Numerical rank: count of singular values above `rel * sigma_max`.
pub fn numerical_rank(m: &Matrix, rel: f64) -> usize {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * max).count()
}
