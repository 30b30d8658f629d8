use super::{elementary_skew, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieBasisKind {
    /// `{(E_ij - E_ji)/sqrt(2) : i < j}`, Frobenius-orthonormal in so(n).
    SoStandard,
    /// `{(E_ij - E_ji)/sqrt(l_i^2 + l_j^2) : i < j}`; with `M = U diag(l)`
    /// the vectors `M A~_ij` are orthonormal along the orbit `M O(k)`.
    SoScaled,
    /// `X, Y, Z` spanning sl(2), each with a factor 1/2.
    Sl2Xyz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieBasis {
    pub kind: LieBasisKind,
    pub elements: Vec<Matrix>,
}

impl LieBasis {
    pub fn so_standard(n: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let elements = pairs(n).map(|(i, j)| elementary_skew(n, i, j) * s).collect();
        LieBasis {
            kind: LieBasisKind::SoStandard,
            elements,
        }
    }

    pub fn so_scaled(l: &[f64]) -> Result<Self> {
        if l.iter().any(|v| !(v.abs() > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("scaled so(k) basis needs nonzero finite l_i"));
        }
        let k = l.len();
        let elements = pairs(k).map(|(i, j)| elementary_skew(k, i, j) / (l[i] * l[i] + l[j] * l[j]).sqrt()).collect();
        Ok(LieBasis {
            kind: LieBasisKind::SoScaled,
            elements,
        })
    }

    pub fn sl2_xyz() -> Self {
        let x = Matrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let y = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]);
        let z = Matrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        LieBasis {
            kind: LieBasisKind::Sl2Xyz,
            elements: vec![x, y, z],
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Side length of the basis matrices.
    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, |e| e.nrows())
    }

    /// `sum_a c_a Y_a`.
    pub fn combine(&self, coeffs: &[f64]) -> Matrix {
        assert_eq!(coeffs.len(), self.len(), "one coefficient per basis element");
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (e, &c) in self.elements.iter().zip(coeffs) {
            out += e * c;
        }
        out
    }
}

/// Index pairs `(i, j)` with `i < j < n`, lexicographic.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob(a: &Matrix, b: &Matrix) -> f64 {
        (a * b.transpose()).trace()
    }

    #[test]
    fn so_standard_is_orthonormal() {
        for n in 2..=6 {
            let b = LieBasis::so_standard(n);
            assert_eq!(b.len(), n * (n - 1) / 2);
            for (p, x) in b.elements.iter().enumerate() {
                for (q, y) in b.elements.iter().enumerate() {
                    let want = if p == q { 1.0 } else { 0.0 };
                    assert!((frob(x, y) - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn sl2_is_traceless_and_matches_noise_layout() {
        let b = LieBasis::sl2_xyz();
        for e in &b.elements {
            assert_eq!(e.trace(), 0.0);
        }
        // X wx + Y wy + Z wz = 1/2 [[wy, wx - wz], [wx + wz, -wy]]
        let (wx, wy, wz) = (0.3, -1.2, 0.7);
        let w = b.combine(&[wx, wy, wz]);
        let want = Matrix::from_row_slice(2, 2, &[wy, wx - wz, wx + wz, -wy]) * 0.5;
        assert!((w - want).norm() < 1e-15);
    }

    #[test]
    fn scaled_basis_at_unit_singular_values() {
        let b = LieBasis::so_scaled(&[1.0, 1.0]).unwrap();
        let s = LieBasis::so_standard(2);
        assert!((&b.elements[0] - &s.elements[0]).norm() < 1e-15);
        assert!(LieBasis::so_scaled(&[1.0, 0.0]).is_err());
    }
}
