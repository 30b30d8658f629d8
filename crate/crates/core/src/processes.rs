//! Named diffusions: invariant Brownian motion on matrix groups and its
//! images on Stiefel, Grassmann, flag, hyperbolic and SPD spaces, the
//! Wishart and Bures–Wasserstein processes with their eigenvalue SDEs, the
//! vertical Brownian motion and the deterministic mean-curvature ODE.

use crate::error::{Error, Result};
use crate::geom::{self, MetricR};
use crate::matcore::{self, check_full_rank, eigh, orthogonality_defect, truncation, LieBasis, LieBasisKind, Matrix, Orthogonal, Spd, Symmetric};
use crate::sde::{ensemble, integrate, Formulation, NoiseShape, NoiseSource, Path, PathStatus, SdeProblem, TimeGrid};

/// Orthogonality defect at which an O(n) path is stopped.
pub const ORTH_GUARD: f64 = 1e-2;
/// `|det - 1|` at which an SL(2) path is stopped.
pub const DET_GUARD: f64 = 1e-2;
/// Smallest admissible imaginary part on the half-plane.
pub const HALF_PLANE_FLOOR: f64 = 1e-8;
/// Eigenvalue floor for the eigenvalue SDEs.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessConfig {
    pub n: usize,
    pub k: usize,
    pub t_end: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
    pub noise_scale: f64,
    pub record_every: usize,
    pub threads: Option<usize>,
    pub initial: Option<Matrix>,
    pub metric: Option<MetricR>,
}

impl ProcessConfig {
    pub fn new(n: usize, k: usize, t_end: f64, dt: f64) -> Result<Self> {
        let grid = TimeGrid::with_dt(t_end, dt)?;
        if n == 0 || k == 0 || k > n {
            return Err(Error::invalid(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        Ok(ProcessConfig {
            n,
            k,
            t_end,
            steps: grid.steps,
            paths: 1,
            seed: 0,
            noise_scale: 1.0,
            record_every: 1,
            threads: None,
            initial: None,
            metric: None,
        })
    }

    pub fn paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn noise_scale(mut self, scale: f64) -> Self {
        self.noise_scale = scale;
        self
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    /// Record only the initial and final states.
    pub fn endpoints_only(mut self) -> Self {
        self.record_every = self.steps;
        self
    }

    pub fn threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    pub fn initial(mut self, m: Matrix) -> Self {
        self.initial = Some(m);
        self
    }

    pub fn metric(mut self, metric: MetricR) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(0.0, self.t_end, self.steps)?.recording(self.record_every))
    }

    pub fn source(&self) -> NoiseSource {
        NoiseSource::new(self.seed).with_scale(self.noise_scale)
    }

    fn metric_or_identity(&self) -> MetricR {
        self.metric.clone().unwrap_or_else(|| MetricR::identity(self.n))
    }
}

fn run(problem: &SdeProblem, cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let grid = cfg.grid()?;
    let source = cfg.source();
    ensemble(cfg.paths, cfg.threads, |i| integrate(problem, &grid, &source, i))
}

fn orth_guard(q: &Matrix) -> Option<String> {
    let d = orthogonality_defect(q);
    (d > ORTH_GUARD).then(|| format!("orthogonality defect {d:.3e}"))
}

fn det_guard(x: &Matrix) -> Option<String> {
    let d = x.determinant();
    ((d - 1.0).abs() > DET_GUARD).then(|| format!("determinant {d:.6}"))
}

/// `dX = X o dW`, `dW = sum_a Y_a dW^a` over the basis (Stratonovich).
pub fn invariant_bm(basis: &LieBasis, x0: &Matrix, cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let n = basis.dim();
    matcore::expect_shape(x0, n, n)?;
    let (tag, guard): (String, fn(&Matrix) -> Option<String>) = match basis.kind {
        LieBasisKind::SoStandard | LieBasisKind::SoScaled => (format!("O({n})"), orth_guard),
        LieBasisKind::Sl2Xyz => ("SL(2)".to_string(), det_guard),
    };
    if let Some(reason) = guard(x0) {
        return Err(Error::invalid(format!("initial state is not in {tag}: {reason}")));
    }
    let b = basis.clone();
    let problem = SdeProblem::new(tag, x0.clone(), Formulation::Stratonovich, NoiseShape::Vector { len: basis.len() })
        .diffusion(move |_, x, w| Ok(x * b.combine(w.as_slice())))
        .guard(guard);
    run(&problem, cfg)
}

fn initial_orthogonal(cfg: &ProcessConfig) -> Result<Matrix> {
    match &cfg.initial {
        None => Ok(Matrix::identity(cfg.n, cfg.n)),
        Some(m) if m.shape() == (cfg.n, cfg.n) => Ok(Orthogonal::new(m.clone())?.into_matrix()),
        Some(m) => {
            matcore::expect_shape(m, cfg.n, cfg.k)?;
            complete_orthonormal(m)
        }
    }
}

/// Extends `n x k` orthonormal columns to an orthogonal matrix whose first
/// `k` columns are exactly `s`.
pub fn complete_orthonormal(s: &Matrix) -> Result<Matrix> {
    let (n, k) = s.shape();
    let defect = orthogonality_defect(s);
    if defect > matcore::tol::ORTH {
        return Err(Error::NotOrthogonal { residual: defect });
    }
    let mut aug = Matrix::zeros(n, n + k);
    aug.view_mut((0, 0), (n, k)).copy_from(s);
    aug.view_mut((0, k), (n, n)).copy_from(&Matrix::identity(n, n));
    let qr = aug.qr();
    let mut q = qr.q();
    q.view_mut((0, 0), (n, k)).copy_from(s);
    // re-orthogonalize the tail against the prescribed head
    for j in k..n {
        for i in 0..j {
            let c = q.column(i).dot(&q.column(j));
            let ci = q.column(i).clone_owned();
            q.column_mut(j).axpy(-c, &ci, 1.0);
        }
        let nrm = q.column(j).norm();
        q.column_mut(j).unscale_mut(nrm);
    }
    Ok(q)
}

/// O(n) Brownian motion with the standard so(n) basis.
pub fn bm_orthogonal(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    invariant_bm(&LieBasis::so_standard(cfg.n), &initial_orthogonal(cfg)?, cfg)
}

/// Stiefel paths `S = Q I_{k,n}`.
pub fn bm_stiefel(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let k = cfg.k;
    let tag = format!("V({}, {k})", cfg.n);
    Ok(bm_orthogonal(cfg)?
        .into_iter()
        .map(|p| p.map_states(tag.clone(), |q| q.columns(0, k).clone_owned()))
        .collect())
}

/// Orthogonal projector onto the column span of `s`.
pub fn span_projector(s: &Matrix) -> Symmetric {
    let q = s.clone().qr().q();
    Symmetric::symmetrize(&(&q * q.transpose()))
}

/// An orthogonal matrix whose first `k` columns span the range of the
/// rank-`k` projector `p`.
pub fn grassmann_frame(p: &Symmetric, k: usize) -> Result<Matrix> {
    let n = p.dim();
    let idem = (p.as_matrix() * p.as_matrix() - p.as_matrix()).norm();
    if idem > 1e-8 || (p.trace() - k as f64).abs() > 1e-8 {
        return Err(Error::invalid(format!("initial state is not a rank-{k} projector in {n}x{n}")));
    }
    let spec = eigh(p)?;
    Ok(spec.vectors.into_matrix())
}

fn grassmann_start(cfg: &ProcessConfig) -> Result<Matrix> {
    match &cfg.initial {
        None => Ok(Matrix::identity(cfg.n, cfg.n)),
        Some(p) => grassmann_frame(&Symmetric::new(p.clone())?, cfg.k),
    }
}

fn check_grassmann(cfg: &ProcessConfig) -> Result<()> {
    if cfg.k >= cfg.n {
        return Err(Error::invalid(format!("Grassmannian needs 1 <= k < n, got n = {}, k = {}", cfg.n, cfg.k)));
    }
    Ok(())
}

/// Grassmann paths as the span projector of the first `k` columns of the
/// O(n) path (exactly idempotent with trace `k` up to rounding).
pub fn bm_grassmann(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    check_grassmann(cfg)?;
    let q0 = grassmann_start(cfg)?;
    let k = cfg.k;
    let tag = format!("Gr({}, {k})", cfg.n);
    Ok(invariant_bm(&LieBasis::so_standard(cfg.n), &q0, cfg)?
        .into_iter()
        .map(|p| p.map_states(tag.clone(), |q| span_projector(&q.columns(0, k).clone_owned()).into_matrix()))
        .collect())
}

/// Itô form on projectors: `dP = dB P - P dB + (k I - n P)/2 dt`, `dB`
/// an so(n) increment.
pub fn bm_grassmann_ito(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    check_grassmann(cfg)?;
    let q0 = grassmann_start(cfg)?;
    let d = truncation(cfg.n, cfg.k);
    let p0 = Symmetric::symmetrize(&(&q0 * &d * d.transpose() * q0.transpose())).into_matrix();
    let (n, k) = (cfg.n as f64, cfg.k as f64);
    let dim = cfg.n;
    let problem = SdeProblem::new(format!("Gr({}, {})", cfg.n, cfg.k), p0, Formulation::Ito, NoiseShape::Skew { n: cfg.n })
        .drift(move |_, p| Ok((Matrix::identity(dim, dim) * k - p * n) * 0.5))
        .diffusion(|_, p, db| Ok(db * p - p * db))
        .reproject(|p| Symmetric::symmetrize(&p).into_matrix());
    run(&problem, cfg)
}

/// Projectors `Q_b Q_b^T` onto consecutive column blocks of `Q`.
pub fn flag_projection(q: &Orthogonal, signature: &[usize]) -> Result<Vec<Symmetric>> {
    let n = q.dim();
    if signature.iter().sum::<usize>() != n || signature.contains(&0) {
        return Err(Error::invalid(format!("flag signature {signature:?} does not partition {n}")));
    }
    let mut out = Vec::with_capacity(signature.len());
    let mut start = 0;
    for &len in signature {
        let block = q.as_matrix().columns(start, len);
        out.push(Symmetric::symmetrize(&(block * block.transpose())));
        start += len;
    }
    Ok(out)
}

/// SL(2) element mapping `i` to `x + i y`.
pub fn sl2_from_point(x: f64, y: f64) -> Result<Matrix> {
    if !(y > 0.0) {
        return Err(Error::invalid(format!("half-plane point needs y > 0, got {y}")));
    }
    let s = y.sqrt();
    Ok(Matrix::from_row_slice(2, 2, &[s, x / s, 0.0, 1.0 / s]))
}

/// `(a i + b) / (c i + d)` as `(x, y)`.
pub fn mobius_i(g: &Matrix) -> (f64, f64) {
    let (a, b, c, d) = (g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let den = c * c + d * d;
    ((a * c + b * d) / den, (a * d - b * c) / den)
}

/// Half-plane Brownian motion from SL(2); states are `1 x 2` rows `[x, y]`.
/// Initial point from `cfg.initial` (`1 x 2`), default `i`.
pub fn bm_poincare(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let (x0, y0) = match &cfg.initial {
        None => (0.0, 1.0),
        Some(z) => {
            matcore::expect_shape(z, 1, 2)?;
            (z[(0, 0)], z[(0, 1)])
        }
    };
    let g0 = sl2_from_point(x0, y0)?;
    let b = LieBasis::sl2_xyz();
    let problem = SdeProblem::new("SL(2)", g0, Formulation::Stratonovich, NoiseShape::Vector { len: 3 })
        .diffusion(move |_, x, w| Ok(x * b.combine(w.as_slice())))
        .guard(|g| {
            let (_, y) = mobius_i(g);
            if !(y >= HALF_PLANE_FLOOR) {
                return Some(format!("imaginary part {y:.3e} below floor"));
            }
            det_guard(g)
        });
    Ok(run(&problem, cfg)?
        .into_iter()
        .map(|p| {
            p.map_states("H^2", |g| {
                let (x, y) = mobius_i(g);
                Matrix::from_row_slice(1, 2, &[x, y])
            })
        })
        .collect())
}

fn initial_spd(cfg: &ProcessConfig) -> Result<Spd> {
    match &cfg.initial {
        None => Ok(Spd::identity(cfg.n)),
        Some(p) => {
            matcore::expect_shape(p, cfg.n, cfg.n)?;
            Spd::new(p.clone())
        }
    }
}

/// `P = G G^T` for `dG = G dW + G dt / 2` (Itô), the GL(n) Brownian motion
/// seen through the trace metric.
pub fn bm_cartan_hadamard(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let n = cfg.n;
    let g0 = initial_spd(cfg)?.sqrt().into_matrix();
    let problem = SdeProblem::new("GL(n)", g0, Formulation::Ito, NoiseShape::Gaussian { rows: n, cols: n })
        .drift(|_, g| Ok(g * 0.5))
        .diffusion(|_, g, dw| Ok(g * dw))
        .guard(|g| check_full_rank(g).err().map(|e| e.to_string()));
    Ok(run(&problem, cfg)?
        .into_iter()
        .map(|p| p.map_states("SPD", |g| Symmetric::symmetrize(&(g * g.transpose())).into_matrix()))
        .collect())
}

fn initial_factor(cfg: &ProcessConfig) -> Result<Matrix> {
    match &cfg.initial {
        None => Ok(truncation(cfg.n, cfg.k)),
        Some(w) => {
            matcore::expect_shape(w, cfg.n, cfg.k)?;
            check_full_rank(w)?;
            Ok(w.clone())
        }
    }
}

/// `P = W W^T` for an `n x k` Wiener matrix `W` started at `cfg.initial`
/// (default `I_{k,n}`).
pub fn wishart(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let w0 = initial_factor(cfg)?;
    let problem = SdeProblem::new("R^{nxk}", w0, Formulation::Ito, NoiseShape::Gaussian { rows: cfg.n, cols: cfg.k }).diffusion(|_, _, dw| Ok(dw.clone()));
    Ok(run(&problem, cfg)?
        .into_iter()
        .map(|p| p.map_states("S+(k, n)", |w| Symmetric::symmetrize(&(w * w.transpose())).into_matrix()))
        .collect())
}

/// Top-`k` factor `U_k diag(sqrt(lambda))` of a PSD matrix.
fn psd_factor(p: &Matrix, k: usize) -> Result<Matrix> {
    let spec = eigh(&Symmetric::symmetrize(p))?;
    let mut f = spec.vectors.as_matrix().columns(0, k).clone_owned();
    for j in 0..k {
        f.column_mut(j).scale_mut(spec.values[j].max(0.0).sqrt());
    }
    Ok(f)
}

fn rank_guard(p: &Matrix, k: usize) -> Option<String> {
    let spec = match eigh(&Symmetric::symmetrize(p)) {
        Ok(s) => s,
        Err(e) => return Some(e.to_string()),
    };
    let threshold = matcore::tol::SPD_REL * spec.values[0].abs();
    let l = spec.values[k - 1];
    (!(l > threshold)).then(|| format!("rank dropped below {k} (lambda_{k} = {l:.3e})"))
}

/// Bures–Wasserstein Brownian motion on rank-`k` PSD matrices, simulated on
/// `P` directly: `dP = dW F^T + F dW^T + (k I - J(P)) dt` with `F` any
/// factor of `P` (Euler–Maruyama). Stops when the rank drops.
pub fn bm_bures_wasserstein(cfg: &ProcessConfig) -> Result<Vec<Path>> {
    let (n, k) = (cfg.n, cfg.k);
    let p0 = match &cfg.initial {
        None if k == n => Matrix::identity(n, n),
        None => {
            let t = truncation(n, k);
            &t * t.transpose()
        }
        Some(p) => {
            matcore::expect_shape(p, n, n)?;
            Symmetric::new(p.clone())?.into_matrix()
        }
    };
    if let Some(reason) = rank_guard(&p0, k) {
        return Err(Error::invalid(format!("initial state: {reason}")));
    }
    let problem = SdeProblem::new("S+(k, n)", p0, Formulation::Ito, NoiseShape::Gaussian { rows: n, cols: k })
        .drift(move |_, p| {
            let j = geom::drift_j_rank(&Symmetric::symmetrize(p), k)?;
            Ok(Matrix::identity(n, n) * k as f64 - j.into_matrix())
        })
        .diffusion(move |_, p, dw| {
            let f = psd_factor(p, k)?;
            let a = dw * f.transpose();
            Ok(&a + a.transpose())
        })
        .reproject(|p| Symmetric::symmetrize(&p).into_matrix())
        .guard(move |p| rank_guard(p, k));
    run(&problem, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenKind {
    Wishart,
    BuresWasserstein,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPath {
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    /// Descending eigenvalues per recorded node.
    pub values: Vec<Vec<f64>>,
    pub status: PathStatus,
}

impl EigenPath {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("an eigenvalue path holds its initial value")
    }
}

/// Drift of `lambda_i` for the chosen kind with `k` columns.
pub fn eigen_drift(kind: EigenKind, lambda: &[f64], k: usize) -> Vec<f64> {
    let k = k as f64;
    (0..lambda.len())
        .map(|i| {
            let li = lambda[i];
            let pair: f64 = (0..lambda.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let lj = lambda[j];
                    match kind {
                        EigenKind::Wishart => (li + lj) / (li - lj),
                        EigenKind::BuresWasserstein => lj * (3.0 * li + lj) / (li * li - lj * lj),
                    }
                })
                .sum();
            k + pair
        })
        .collect()
}

fn eigen_guard(lambda: &[f64]) -> Option<String> {
    if let Some(i) = lambda.iter().position(|&v| !(v > EIGEN_FLOOR)) {
        return Some(format!("lambda_{} = {:.3e} below floor", i + 1, lambda[i]));
    }
    lambda
        .windows(2)
        .position(|w| !(w[0] > w[1]))
        .map(|i| format!("collision between lambda_{} and lambda_{}", i + 1, i + 2))
}

/// Euler–Maruyama for `d lambda_i = 2 sqrt(lambda_i) d beta_i + drift_i dt`,
/// stopped (never clamped) on collision or loss of positivity.
pub fn eigen_sde(kind: EigenKind, lambda0: &[f64], k: usize, cfg: &ProcessConfig) -> Result<Vec<EigenPath>> {
    if let Some(reason) = eigen_guard(lambda0) {
        return Err(Error::invalid(format!(
            "initial eigenvalues must be positive and strictly decreasing: {reason}"
        )));
    }
    let grid = cfg.grid()?;
    let source = cfg.source();
    let dt = grid.dt();
    let n = lambda0.len();
    ensemble(cfg.paths, cfg.threads, |path| {
        let mut lambda = lambda0.to_vec();
        let mut times = vec![grid.t0];
        let mut values = vec![lambda.clone()];
        let mut status = PathStatus::Completed;
        let mut recorded = 0;
        for s in 0..grid.steps {
            let db = source.normals(path, s as u64, n, dt);
            let drift = eigen_drift(kind, &lambda, k);
            let next: Vec<f64> = (0..n).map(|i| lambda[i] + 2.0 * lambda[i].sqrt() * db[i] + drift[i] * dt).collect();
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { step: s + 1 });
            }
            if let Some(reason) = eigen_guard(&next) {
                if recorded != s {
                    times.push(grid.time(s));
                    values.push(lambda.clone());
                }
                status = PathStatus::Stopped {
                    step: s + 1,
                    time: grid.time(s + 1),
                    reason,
                };
                break;
            }
            lambda = next;
            if grid.records(s + 1) {
                times.push(grid.time(s + 1));
                values.push(lambda.clone());
                recorded = s + 1;
            }
        }
        Ok(EigenPath { grid, times, values, status })
    })
}

/// Descending eigenvalues of every recorded state.
pub fn eigenvalues_of(path: &Path) -> Result<Vec<Vec<f64>>> {
    path.states.iter().map(|p| Ok(eigh(&Symmetric::symmetrize(p))?.values)).collect()
}

/// Vertical Brownian motion `dX = Pr^V_R(X) dW_R` (Itô) with `dW_R` the
/// `tr_R` Brownian increment, returned with its image `X X^T`.
pub fn vertical_bm(m0: &Matrix, cfg: &ProcessConfig) -> Result<(Vec<Path>, Vec<Path>)> {
    matcore::expect_shape(m0, cfg.n, cfg.k)?;
    check_full_rank(m0)?;
    let metric = cfg.metric_or_identity();
    let problem = SdeProblem::new("R^{nxk}", m0.clone(), Formulation::Ito, NoiseShape::Gaussian { rows: cfg.n, cols: cfg.k })
        .diffusion(move |_, x, dw| {
            let noise = if metric.is_identity() { dw.clone() } else { metric.factor_inverse() * dw };
            geom::vertical_part(x, &noise, &metric)
        })
        .guard(|x| check_full_rank(x).err().map(|e| e.to_string()));
    let total = run(&problem, cfg)?;
    let image = total
        .iter()
        .cloned()
        .map(|p| p.map_states("S+(k, n)", |x| Symmetric::symmetrize(&(x * x.transpose())).into_matrix()))
        .collect();
    Ok((total, image))
}

/// `dX = (I - X X^T / X^T X) dW` on `R^n \ {0}` (Itô); returns the paths
/// and `S = |X|^2` along each.
pub fn sphere_vertical_bm(x0: &[f64], cfg: &ProcessConfig) -> Result<Vec<(Path, Vec<f64>)>> {
    let n = x0.len();
    if x0.iter().all(|v| *v == 0.0) || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("start point must be finite and nonzero"));
    }
    let x0 = Matrix::from_column_slice(n, 1, x0);
    let problem = SdeProblem::new(format!("R^{n} minus 0"), x0, Formulation::Ito, NoiseShape::Gaussian { rows: n, cols: 1 })
        .diffusion(|_, x, dw| {
            let s = x.norm_squared();
            Ok(dw - x * (x.dot(dw) / s))
        })
        .guard(|x| (x.norm_squared() < 1e-300).then(|| "reached the origin".to_string()));
    Ok(run(&problem, cfg)?
        .into_iter()
        .map(|p| {
            let s = p.states.iter().map(|x| x.norm_squared()).collect();
            (p, s)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftField {
    /// `J(P)`.
    Spectral,
    /// `J^R(P)`.
    Metric(MetricR),
}

impl DriftField {
    pub fn eval(&self, p: &Matrix) -> Result<Matrix> {
        let p = Spd::new(p.clone())?;
        Ok(match self {
            DriftField::Spectral => geom::drift_j_spectral(&p).into_matrix(),
            DriftField::Metric(m) => geom::drift_j_r(&p, m)?.into_matrix(),
        })
    }
}

/// Classical RK4 for `dP/dt = J(P)` (or `J^R`).
pub fn mcf_ode(p0: &Spd, field: &DriftField, grid: &TimeGrid) -> Result<Path> {
    let dt = grid.dt();
    let mut p = p0.as_matrix().clone();
    let mut times = vec![grid.t0];
    let mut states = vec![p.clone()];
    for s in 0..grid.steps {
        p = rk4_step(field, &p, dt)?;
        if grid.records(s + 1) {
            times.push(grid.time(s + 1));
            states.push(p.clone());
        }
    }
    Ok(Path {
        manifold: "SPD".into(),
        grid: *grid,
        times,
        states,
        status: PathStatus::Completed,
    })
}

pub(crate) fn rk4_step(field: &DriftField, p: &Matrix, dt: f64) -> Result<Matrix> {
    let k1 = field.eval(p)?;
    let k2 = field.eval(&(p + &k1 * (dt / 2.0)))?;
    let k3 = field.eval(&(p + &k2 * (dt / 2.0)))?;
    let k4 = field.eval(&(p + &k3 * dt))?;
    let next = p + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
    Ok(Symmetric::symmetrize(&next).into_matrix())
}
