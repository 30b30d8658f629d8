use nalgebra::SymmetricEigen;

use super::{Matrix, Orthogonal, Symmetric};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_DIM: usize = 200;

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Orthogonal,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// `U diag(f(lambda)) U^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Symmetric {
        let d: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.with_values(&d)
    }

    /// `U diag(d) U^T` for arbitrary diagonal values in this eigenframe.
    pub fn with_values(&self, d: &[f64]) -> Symmetric {
        let u = self.vectors.as_matrix();
        let mut scaled = u.clone();
        for (j, &dj) in d.iter().enumerate() {
            scaled.column_mut(j).scale_mut(dj);
        }
        Symmetric::symmetrize(&(scaled * u.transpose()))
    }

    pub fn reconstruct(&self) -> Symmetric {
        self.with_values(&self.values)
    }

    /// Spectrum of `f(A)`, re-sorted descending.
    pub fn mapped(&self, f: impl Fn(f64) -> f64) -> Spectrum {
        let pairs: Vec<(f64, usize)> = self.values.iter().map(|&v| f(v)).zip(0..).collect();
        sorted_spectrum(pairs, self.vectors.as_matrix())
    }
}

fn sorted_spectrum(mut pairs: Vec<(f64, usize)>, vectors: &Matrix) -> Spectrum {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let n = vectors.nrows();
    let mut u = Matrix::zeros(n, pairs.len());
    for (dst, &(_, src)) in pairs.iter().enumerate() {
        u.set_column(dst, &vectors.column(src));
    }
    Spectrum {
        values: pairs.into_iter().map(|p| p.0).collect(),
        vectors: Orthogonal(u),
    }
}

/// Symmetric eigendecomposition with descending eigenvalues.
pub fn eigh(a: &Symmetric) -> Result<Spectrum> {
    let m = a.as_matrix();
    super::check_finite(m)?;
    let n = m.nrows();
    let iterations = MAX_SWEEPS_PER_DIM * n.max(1);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, iterations).ok_or(Error::EigenNoConvergence { iterations })?;
    let pairs: Vec<(f64, usize)> = eig.eigenvalues.iter().cloned().zip(0..).collect();
    Ok(sorted_spectrum(pairs, &eig.eigenvectors))
}
