//! Seeded random matrices for tests, probes and control sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Matrix, Spd, Symmetric};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `U diag(lambda) U^T` with Haar `U` and eigenvalues uniform in `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Spd {
    let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    spd_with_spectrum(&random_orthogonal(rng, n), &lambda)
}

pub fn spd_with_spectrum(u: &Matrix, lambda: &[f64]) -> Spd {
    let mut scaled = u.clone();
    for (j, &l) in lambda.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l);
    }
    Spd::from_symmetric(Symmetric::symmetrize(&(scaled * u.transpose()))).expect("positive spectrum gives SPD")
}
