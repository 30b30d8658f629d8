use super::{max_abs, Matrix};
use crate::error::{Error, Result};

/// `1e-5 * (1 + ||M||_inf)`, with `||.||_inf` the largest absolute entry.
pub fn default_fd_step(m: &Matrix) -> f64 {
    1e-5 * (1.0 + max_abs(m))
}

/// Central-difference gradient of a scalar field on matrices:
/// `(f(M + h E_ab) - f(M - h E_ab)) / 2h` entrywise.
///
/// Errors from `f` are propagated as-is; a non-finite value is reported with
/// the index of the perturbed entry.
pub fn fd_gradient<F>(f: F, m: &Matrix, h: Option<f64>) -> Result<Matrix>
where
    F: Fn(&Matrix) -> Result<f64>,
{
    let h = h.unwrap_or_else(|| default_fd_step(m));
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let mut grad = Matrix::zeros(m.nrows(), m.ncols());
    let mut probe = m.clone();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let orig = probe[(r, c)];
            probe[(r, c)] = orig + h;
            let plus = f(&probe)?;
            probe[(r, c)] = orig - h;
            let minus = f(&probe)?;
            probe[(r, c)] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::FdNonFinite { row: r, col: c });
            }
            grad[(r, c)] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{sample, Spd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn log_det_gram(m: &Matrix) -> Result<f64> {
        Spd::gram_of(m).map(|p| p.log_det())
    }

    #[test]
    fn trace_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = sample::gaussian_matrix(&mut rng, 3, 3);
        let g = fd_gradient(|x| Ok(x.trace()), &m, None).unwrap();
        assert!((g - Matrix::identity(3, 3)).norm() < 1e-9);
    }

    #[test]
    fn half_frobenius_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = sample::gaussian_matrix(&mut rng, 3, 2);
        let g = fd_gradient(|x| Ok(0.5 * x.norm_squared()), &m, None).unwrap();
        assert!((g - &m).norm() < 1e-9);
    }

    #[test]
    fn log_det_at_identity() {
        let g = fd_gradient(log_det_gram, &Matrix::identity(2, 2), None).unwrap();
        assert!((g - Matrix::identity(2, 2) * 2.0).norm() < 1e-8);
    }

    #[test]
    fn log_det_matches_analytic_gradient() {
        // d/dM log det(M M^T) = 2 M^{-T}
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = 3;
            let m = Matrix::identity(n, n) * 2.0 + sample::gaussian_matrix(&mut rng, n, n) * 0.3;
            let h = default_fd_step(&m);
            let want = m.clone().try_inverse().unwrap().transpose() * 2.0;
            let got = fd_gradient(log_det_gram, &m, Some(h)).unwrap();
            let rel = (got - &want).norm() / want.norm();
            assert!(rel <= 10.0 * h * h, "rel {rel:e} vs {:e}", 10.0 * h * h);
        }
    }

    #[test]
    fn non_finite_value_is_located() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-6]);
        let err = fd_gradient(|x| Ok(x[(1, 1)].ln()), &m, Some(1e-3)).unwrap_err();
        assert_eq!(err, Error::FdNonFinite { row: 1, col: 1 });
    }
}
