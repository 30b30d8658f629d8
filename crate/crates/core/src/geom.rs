//! Geometry of the submersion `pi(M) = M M^T` from full-rank `n x k`
//! matrices, under the Frobenius metric or `<V, W>_R = tr(R V W^T)`.
//!
//! The vertical space at `M` is `M so(k)`. Under `tr_R` everything is
//! computed by pulling back through the isometry `M -> G M`, `G = R^{1/2}`.

use crate::error::{Error, Result};
use crate::matcore::{check_full_rank, eigh, expect_shape, fd_gradient, solve_lyapunov_skew, Matrix, Skew, Spd, Spectrum, Symmetric};

/// Largest accepted condition number of the metric factor `G`.
pub const METRIC_CONDITION_LIMIT: f64 = 1e8;

/// Scalar relating the log-volume gradient to `J`: `J = KAPPA * pi_*(grad log vol)`.
pub const KAPPA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmersionSpec {
    pub n: usize,
    pub k: usize,
    pub fiber_dim: usize,
    pub c: f64,
}

impl SubmersionSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        let fiber_dim = k * (k - 1) / 2;
        Ok(SubmersionSpec {
            n,
            k,
            fiber_dim,
            c: fiber_dim as f64 / 2.0,
        })
    }
}

/// A tangent vector in ambient coordinates at a full-rank base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentAtM {
    pub base: Matrix,
    pub vector: Matrix,
}

impl TangentAtM {
    pub fn new(base: Matrix, vector: Matrix) -> Result<Self> {
        check_full_rank(&base)?;
        expect_shape(&vector, base.nrows(), base.ncols())?;
        crate::matcore::check_finite(&vector)?;
        Ok(TangentAtM { base, vector })
    }
}

/// `tr_R` metric with its symmetric square-root factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricR {
    r: Spd,
    g: Matrix,
    g_inv: Matrix,
    identity: bool,
}

impl MetricR {
    pub fn identity(n: usize) -> Self {
        MetricR {
            r: Spd::identity(n),
            g: Matrix::identity(n, n),
            g_inv: Matrix::identity(n, n),
            identity: true,
        }
    }

    pub fn new(r: Spd) -> Result<Self> {
        let condition = r.condition().sqrt();
        if !(condition <= METRIC_CONDITION_LIMIT) {
            return Err(Error::Conditioning {
                condition,
                limit: METRIC_CONDITION_LIMIT,
            });
        }
        let n = r.dim();
        let identity = r.as_matrix() == &Matrix::identity(n, n);
        let g = r.sqrt().into_matrix();
        let g_inv = r.inv_sqrt().into_matrix();
        Ok(MetricR { r, g, g_inv, identity })
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn r(&self) -> &Spd {
        &self.r
    }

    /// `G` with `G^T G = R`.
    pub fn factor(&self) -> &Matrix {
        &self.g
    }

    pub fn factor_inverse(&self) -> &Matrix {
        &self.g_inv
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `tr(R V W^T)`.
    pub fn inner(&self, v: &Matrix, w: &Matrix) -> f64 {
        if self.identity {
            v.dot(w)
        } else {
            (self.r.as_matrix() * v).dot(w)
        }
    }

    fn push(&self, m: &Matrix) -> Matrix {
        if self.identity {
            m.clone()
        } else {
            &self.g * m
        }
    }

    fn pull(&self, m: Matrix) -> Matrix {
        if self.identity {
            m
        } else {
            &self.g_inv * m
        }
    }

    fn check_dim(&self, m: &Matrix) -> Result<()> {
        if m.nrows() != self.dim() {
            return Err(Error::Shape {
                expected: format!("{} rows to match the metric", self.dim()),
                got: crate::matcore::shape_str(m),
            });
        }
        Ok(())
    }
}

/// `M^T M` and its spectrum, after the rank guard.
fn inner_gram(m: &Matrix) -> Result<Spd> {
    check_full_rank(m)?;
    Spd::gram_of(&m.transpose())
}

fn vertical_frobenius(m: &Matrix, v: &Matrix) -> Result<Matrix> {
    expect_shape(v, m.nrows(), m.ncols())?;
    let p = inner_gram(m)?;
    let mtv = m.transpose() * v;
    let b = Skew::skew_part(&(&mtv * 2.0));
    let k = solve_lyapunov_skew(&p, &b)?;
    Ok(m * k.as_matrix())
}

/// Skew generators `V A_ij V^T / sqrt(lambda_i + lambda_j)` from the
/// spectrum of `M^T M`; `M` times each is a unit vertical vector.
fn onb_generators(spec: &Spectrum) -> Vec<Matrix> {
    let k = spec.dim();
    let v = spec.vectors.as_matrix();
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for (i, j) in crate::matcore::pairs(k) {
        let s = (spec.values[i] + spec.values[j]).sqrt();
        let vi = v.column(i);
        let vj = v.column(j);
        let a = (vi * vj.transpose() - vj * vi.transpose()) / s;
        out.push(a);
    }
    out
}

/// Vertical part of a tangent vector under the metric.
pub fn vertical_project(t: &TangentAtM, metric: &MetricR) -> Result<TangentAtM> {
    metric.check_dim(&t.base)?;
    let v = vertical_frobenius(&metric.push(&t.base), &metric.push(&t.vector))?;
    Ok(TangentAtM {
        base: t.base.clone(),
        vector: metric.pull(v),
    })
}

/// `input - vertical_project(input)`.
pub fn horizontal_project(t: &TangentAtM, metric: &MetricR) -> Result<TangentAtM> {
    let v = vertical_project(t, metric)?;
    Ok(TangentAtM {
        base: t.base.clone(),
        vector: &t.vector - v.vector,
    })
}

/// Raw-matrix form of [`vertical_project`], used on hot paths.
pub fn vertical_part(m: &Matrix, v: &Matrix, metric: &MetricR) -> Result<Matrix> {
    metric.check_dim(m)?;
    Ok(metric.pull(vertical_frobenius(&metric.push(m), &metric.push(v))?))
}

/// `metric`-orthonormal basis of `M so(k)`, `k(k-1)/2` vectors.
pub fn vertical_onb(m: &Matrix, metric: &MetricR) -> Result<Vec<TangentAtM>> {
    metric.check_dim(m)?;
    let gm = metric.push(m);
    let spec = eigh(inner_gram(&gm)?.as_symmetric())?;
    Ok(onb_generators(&spec)
        .into_iter()
        .map(|a| TangentAtM {
            base: m.clone(),
            vector: m * a,
        })
        .collect())
}

/// `sff(MA, MA) = M A^2 - vertical(M A^2)` (Frobenius metric).
pub fn sff_vertical(m: &Matrix, a: &Skew) -> Result<Matrix> {
    if a.dim() != m.ncols() {
        return Err(Error::Shape {
            expected: format!("{k}x{k} generator", k = m.ncols()),
            got: crate::matcore::shape_str(a.as_matrix()),
        });
    }
    let ma2 = m * (a.as_matrix() * a.as_matrix());
    let v = vertical_frobenius(m, &ma2)?;
    Ok(ma2 - v)
}

fn mean_curvature_frobenius(m: &Matrix) -> Result<Matrix> {
    let spec = eigh(inner_gram(m)?.as_symmetric())?;
    let gens = onb_generators(&spec);
    let mut h = Matrix::zeros(m.nrows(), m.ncols());
    if gens.is_empty() {
        return Ok(h);
    }
    let dim = gens.len() as f64;
    for a in gens {
        h += sff_vertical(m, &Skew::skew_part(&a))?;
    }
    Ok(h / dim)
}

/// Mean curvature of the orbit `M O(k)`, normalized by the fiber dimension.
pub fn mean_curvature(m: &Matrix, metric: &MetricR) -> Result<Matrix> {
    metric.check_dim(m)?;
    Ok(metric.pull(mean_curvature_frobenius(&metric.push(m))?))
}

/// Gram matrix of the normalized basis `A_ij / sqrt(2)` of so(k) under
/// `<A, B> = tr(P A B^T)`, pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn metric_gram(p: &Spd, k: usize) -> Result<Symmetric> {
    if p.dim() != k {
        return Err(Error::Shape {
            expected: format!("{k}x{k}"),
            got: format!("{0}x{0}", p.dim()),
        });
    }
    let pm = p.as_matrix();
    let pairs: Vec<(usize, usize)> = crate::matcore::pairs(k).collect();
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let size = pairs.len();
    let mut g = Matrix::zeros(size, size);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for (c, &(m, l)) in pairs.iter().enumerate() {
            g[(r, c)] = 0.5 * (d(j, l) * pm[(i, m)] - d(j, m) * pm[(i, l)] - d(i, l) * pm[(j, m)] + d(i, m) * pm[(j, l)]);
        }
    }
    Ok(Symmetric::symmetrize(&g))
}

/// `1/2 log det` of the orbit Gram matrix at `M`; the constant `vol(O(k))`
/// is dropped.
pub fn orbit_log_volume(m: &Matrix) -> Result<f64> {
    let p = inner_gram(m)?;
    let g = metric_gram(&p, m.ncols())?;
    if g.dim() == 0 {
        return Ok(0.0);
    }
    let chol = nalgebra::Cholesky::new(g.into_matrix()).ok_or_else(|| Error::invalid("orbit Gram matrix is not positive definite"))?;
    Ok(chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum())
}

fn j_diagonal(values: &[f64], rank: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            if i >= rank {
                return 0.0;
            }
            let li = values[i];
            (0..rank).filter(|&j| j != i).map(|j| li / (li + values[j])).sum()
        })
        .collect()
}

/// `J(P) = U diag(sum_{j != i} lambda_i / (lambda_i + lambda_j)) U^T`.
pub fn drift_j_spectral(p: &Spd) -> Symmetric {
    let spec = p.spectrum();
    spec.with_values(&j_diagonal(&spec.values, spec.dim()))
}

/// Rank-`k` form for `P = M M^T` with `M` of size `n x k`: only the top `k`
/// eigenpairs take part, the rest contribute zero.
pub fn drift_j_rank(p: &Symmetric, k: usize) -> Result<Symmetric> {
    let spec = eigh(p)?;
    if k == 0 || k > spec.dim() {
        return Err(Error::invalid(format!("rank {k} out of range for {0}x{0}", spec.dim())));
    }
    let threshold = crate::matcore::tol::SPD_REL * spec.values[0].abs();
    if !(spec.values[k - 1] > threshold) {
        return Err(Error::RankDeficient {
            sigma_min: spec.values[k - 1].max(0.0).sqrt(),
            threshold: threshold.sqrt(),
        });
    }
    Ok(spec.with_values(&j_diagonal(&spec.values, k)))
}

/// `KAPPA * (V M^T + M V^T)` with `V` the finite-difference gradient of
/// [`orbit_log_volume`].
pub fn drift_j_gradient(m: &Matrix) -> Result<Symmetric> {
    check_full_rank(m)?;
    let v = fd_gradient(orbit_log_volume, m, None)?;
    let push = &v * m.transpose();
    Ok(Symmetric::symmetrize(&((&push + push.transpose()) * KAPPA)))
}

/// `J^R(P) = G^{-1} J(G P G) G^{-1}`, `G = R^{1/2}`.
pub fn drift_j_r(p: &Spd, metric: &MetricR) -> Result<Symmetric> {
    if metric.dim() != p.dim() {
        return Err(Error::Shape {
            expected: format!("{0}x{0}", metric.dim()),
            got: format!("{0}x{0}", p.dim()),
        });
    }
    if metric.is_identity() {
        return Ok(drift_j_spectral(p));
    }
    let g = metric.factor();
    let gi = metric.factor_inverse();
    let inner = Spd::from_symmetric(Symmetric::symmetrize(&(g * p.as_matrix() * g)))?;
    let j = drift_j_spectral(&inner);
    Ok(Symmetric::symmetrize(&(gi * j.as_matrix() * gi)))
}
