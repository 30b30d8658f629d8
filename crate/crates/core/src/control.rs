//! The invariant control system `dP/dt = J^R(P)` on SPD matrices.
//!
//! Controls are piecewise-constant metrics `R`, given either directly or
//! through a factor `G` (then `R = G G^T`, so that
//! `J^R(P) = G^{-T} J(G^T P G) G^{-1}`).

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{drift_j_r, MetricR};
use crate::matcore::{self, eigh, sample, Matrix, Orthogonal, Spd, Symmetric};
use crate::processes::{rk4_step, DriftField};
use crate::sde::{Path, PathStatus, TimeGrid};

/// Loewner tolerance on `lambda_min(P_{t2} - P_{t1})`.
pub const LOEWNER_TOL: f64 = -1e-10;

fn check_positive(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::invalid("empty eigenvalue vector"));
    }
    if let Some(i) = lambda.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("lambda_{} = {} is not positive", i + 1, lambda[i])));
    }
    Ok(())
}

/// `alpha_i = sum_{j != i} 1/(lambda_i + lambda_j)`.
pub fn alpha(lambda: &[f64]) -> Result<Vec<f64>> {
    check_positive(lambda)?;
    let n = lambda.len();
    Ok((0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                s += 1.0 / (lambda[i] + lambda[j]);
            }
            s
        })
        .collect())
}

/// `sum_{i<j} (e_i + e_j) / (lambda_i + lambda_j)`.
pub fn cone_sum(lambda: &[f64]) -> Result<Vec<f64>> {
    check_positive(lambda)?;
    let mut out = vec![0.0; lambda.len()];
    for (i, j) in matcore::pairs(lambda.len()) {
        let w = 1.0 / (lambda[i] + lambda[j]);
        out[i] += w;
        out[j] += w;
    }
    Ok(out)
}

/// Jacobian of [`alpha`]: diagonal `-sum_{j != i} (lambda_i + lambda_j)^-2`,
/// off-diagonal `-(lambda_i + lambda_j)^-2`.
pub fn alpha_jacobian(lambda: &[f64]) -> Result<Symmetric> {
    check_positive(lambda)?;
    let n = lambda.len();
    let mut d = Matrix::zeros(n, n);
    for (i, j) in matcore::pairs(n) {
        let w = (lambda[i] + lambda[j]).powi(-2);
        d[(i, j)] = -w;
        d[(j, i)] = -w;
        d[(i, i)] -= w;
        d[(j, j)] -= w;
    }
    Symmetric::new(d)
}

/// Factors `M_k` (`k = 1..n-1`) with `d alpha = -sum_k M_k M_k^T`; `M_k`
/// has the `n - k` columns `(e_k + e_j) / (lambda_k + lambda_j)`, `j > k`.
pub fn alpha_sos(lambda: &[f64]) -> Result<Vec<Matrix>> {
    check_positive(lambda)?;
    let n = lambda.len();
    if n < 2 {
        return Err(Error::invalid("sum-of-squares split needs n >= 2"));
    }
    Ok((0..n - 1)
        .map(|k| {
            let mut m = Matrix::zeros(n, n - 1 - k);
            for (c, j) in ((k + 1)..n).enumerate() {
                let w = 1.0 / (lambda[k] + lambda[j]);
                m[(k, c)] = w;
                m[(j, c)] = w;
            }
            m
        })
        .collect())
}

/// `M V diag(alpha(lambda)) V^T M^T`.
pub fn accessible_direction(m: &Matrix, v: &Matrix, lambda: &[f64]) -> Result<Symmetric> {
    let a = alpha(lambda)?;
    let mut va = v.clone();
    for (j, w) in a.iter().enumerate() {
        va.column_mut(j).scale_mut(*w);
    }
    let c = va * v.transpose();
    Ok(Symmetric::symmetrize(&(m * c * m.transpose())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccessibleSample {
    pub base: Spd,
    /// The factor `M` with `M M^T = P` used for the directions.
    pub factor: Matrix,
    pub directions: Vec<Symmetric>,
}

/// Seeded directions of the accessible cone at `P`, using `M = P^{1/2}`.
pub fn accessible_sample<R: Rng + ?Sized>(p: &Spd, count: usize, rng: &mut R) -> Result<AccessibleSample> {
    let n = p.dim();
    let m = p.sqrt().into_matrix();
    let mut directions = Vec::with_capacity(count);
    for _ in 0..count {
        let v = sample::random_orthogonal(rng, n);
        let lambda: Vec<f64> = (0..n).map(|_| (rng.random_range(-2.0..2.0f64)).exp()).collect();
        directions.push(accessible_direction(&m, &v, &lambda)?);
    }
    Ok(AccessibleSample {
        base: p.clone(),
        factor: m,
        directions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    R(Spd),
    /// Invertible factor; the metric is `G G^T`.
    G(Matrix),
}

impl Control {
    pub fn metric(&self) -> Result<MetricR> {
        match self {
            Control::R(r) => MetricR::new(r.clone()),
            Control::G(g) => {
                matcore::check_full_rank(g)?;
                if g.nrows() != g.ncols() {
                    return Err(Error::invalid("control factor G must be square"));
                }
                MetricR::new(Spd::gram_of(g)?)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Control::R(r) => r.dim(),
            Control::G(g) => g.nrows(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub control: Control,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSchedule {
    pub segments: Vec<Segment>,
}

impl ControlSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let s = ControlSchedule { segments };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.segments.first() else {
            return Err(Error::invalid("schedule has no segments"));
        };
        let n = first.control.dim();
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                return Err(Error::invalid(format!("segment {}: duration must be positive", i + 1)));
            }
            if seg.control.dim() != n {
                return Err(Error::invalid(format!(
                    "segment {}: control is {}x{0}, expected {n}x{n}",
                    i + 1,
                    seg.control.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.segments.first().map_or(0, |s| s.control.dim())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Parses `duration; R = [r11, r12, ...]` or `duration; G = [...]`, one
    /// segment per line, row-major entries; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut segments = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::invalid(format!("schedule line {}: {msg}", lineno + 1));
            let (dur, rest) = line.split_once(';').ok_or_else(|| at("expected `duration; R = [...]`".into()))?;
            let duration: f64 = dur.trim().parse().map_err(|_| at(format!("bad duration `{}`", dur.trim())))?;
            let (kind, values) = rest.split_once('=').ok_or_else(|| at("expected `R = [...]` or `G = [...]`".into()))?;
            let values = values.trim();
            let inner = values
                .strip_prefix('[')
                .and_then(|v| v.strip_suffix(']'))
                .ok_or_else(|| at("matrix entries must be enclosed in [ ]".into()))?;
            let entries: Vec<f64> = inner
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| at(format!("bad number `{t}`"))))
                .collect::<Result<_>>()?;
            let n = (entries.len() as f64).sqrt().round() as usize;
            if n == 0 || n * n != entries.len() {
                return Err(at(format!("{} entries is not a square matrix", entries.len())));
            }
            let m = Matrix::from_row_slice(n, n, &entries);
            let control = match kind.trim() {
                "R" => Control::R(Spd::new(m).map_err(|e| at(format!("R: {e}")))?),
                "G" => {
                    matcore::check_full_rank(&m).map_err(|e| at(format!("G: {e}")))?;
                    Control::G(m)
                }
                other => return Err(at(format!("unknown control kind `{other}`, expected R or G"))),
            };
            segments.push(Segment { duration, control });
        }
        ControlSchedule::new(segments)
    }
}

/// A seeded schedule mixing R- and G-form segments.
pub fn random_schedule<R: Rng + ?Sized>(rng: &mut R, n: usize, segments: usize) -> ControlSchedule {
    let segments = (0..segments)
        .map(|i| {
            let duration = rng.random_range(0.05..0.5);
            let control = if i % 2 == 0 {
                Control::R(sample::random_spd(rng, n, 0.2, 5.0))
            } else {
                Control::G(Matrix::identity(n, n) + sample::gaussian_matrix(rng, n, n) * 0.3)
            };
            Segment { duration, control }
        })
        .collect();
    ControlSchedule { segments }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlRun {
    pub path: Path,
    /// Smallest eigenvalue of `P_{t+dt} - P_t` over all steps.
    pub min_increment_eigenvalue: f64,
    pub monotone: bool,
}

/// RK4 with `substeps` steps per segment, recording every step.
pub fn integrate_control(p0: &Spd, schedule: &ControlSchedule, substeps: usize) -> Result<ControlRun> {
    schedule.validate()?;
    if schedule.dim() != p0.dim() {
        return Err(Error::invalid(format!("schedule is {0}x{0} but P0 is {1}x{1}", schedule.dim(), p0.dim())));
    }
    let substeps = substeps.max(1);
    let mut p = p0.as_matrix().clone();
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![p.clone()];
    let mut min_inc = f64::INFINITY;
    for seg in &schedule.segments {
        let field = DriftField::Metric(seg.control.metric()?);
        let dt = seg.duration / substeps as f64;
        for _ in 0..substeps {
            let next = rk4_step(&field, &p, dt)?;
            let inc = eigh(&Symmetric::symmetrize(&(&next - &p)))?.min();
            min_inc = min_inc.min(inc);
            p = next;
            t += dt;
            times.push(t);
            states.push(p.clone());
        }
    }
    let total = schedule.total_duration();
    let path = Path {
        manifold: "SPD".into(),
        grid: TimeGrid::new(0.0, total, times.len() - 1)?,
        times,
        states,
        status: PathStatus::Completed,
    };
    Ok(ControlRun {
        path,
        min_increment_eigenvalue: min_inc,
        monotone: min_inc > LOEWNER_TOL,
    })
}

/// `lambda >= 0` and `max_i lambda_i <= sum_{j != i} lambda_j` (within `tol`).
pub fn in_pair_cone(lambda: &[f64], tol: f64) -> bool {
    let total: f64 = lambda.iter().sum();
    lambda.iter().all(|&v| v >= -tol && v <= total - v + tol)
}

/// Nonnegative weights `c_ij` with `sum c_ij (e_i + e_j) = lambda`.
pub fn pair_decomposition(lambda: &[f64]) -> Result<Vec<((usize, usize), f64)>> {
    let n = lambda.len();
    let scale = lambda.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    let tol = 1e-12 * scale;
    if n < 2 || !in_pair_cone(lambda, tol) {
        return Err(Error::invalid(format!("{lambda:?} is not in the cone spanned by e_i + e_j")));
    }
    let mut x: Vec<f64> = lambda.iter().map(|v| v.max(0.0)).collect();
    let mut out: Vec<((usize, usize), f64)> = Vec::new();
    for _ in 0..(4 * n * n + 8) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
        let (i, j) = (order[0], order[1]);
        if x[j] <= tol {
            break;
        }
        let s: f64 = x.iter().sum();
        let third = if n > 2 { x[order[2]] } else { 0.0 };
        let delta = x[j].min((s - 2.0 * third) / 2.0).max(0.0);
        if delta <= 0.0 {
            break;
        }
        x[i] -= delta;
        x[j] -= delta;
        let key = (i.min(j), i.max(j));
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, w)) => *w += delta,
            None => out.push((key, delta)),
        }
    }
    if x.iter().any(|v| v.abs() > 1e-9 * scale) {
        return Err(Error::invalid(format!("cone decomposition of {lambda:?} left residual {x:?}")));
    }
    out.sort_by_key(|a| a.0);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    /// Time budget for the whole probe.
    pub t_budget: f64,
    /// Level of `r_i q_i` on the active pair.
    pub pair_level: f64,
    /// `pair_level / other level` for inactive coordinates.
    pub leak_ratio: f64,
    /// Piecewise-constant pieces per pair.
    pub pieces: usize,
    /// RK4 steps per piece.
    pub substeps: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            t_budget: 100.0,
            pair_level: 0.05,
            leak_ratio: 1e-3,
            pieces: 20,
            substeps: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub endpoint: Matrix,
    pub elapsed: f64,
    /// False when the budget or the conditioning limit cut the probe short.
    pub complete: bool,
    pub note: Option<String>,
    /// `log` eigenvalues of `M^{-1} P M^{-T}` in the frame `U`
    /// (the commuting-frame coordinates of the endpoint).
    pub achieved_log: Vec<f64>,
    /// Off-diagonal mass of `U^T M^{-1} P M^{-T} U`.
    pub frame_misalignment: f64,
    /// `|| P - M U diag(e^lambda) U^T M^T ||_F`.
    pub distance_multiplicative: f64,
    /// `|| P - (P0 + U diag(e^lambda) U^T) ||_F`.
    pub distance_additive: f64,
    pub monotone: bool,
}

/// Steers `P0` along `lambda` in the cone with controls sharing the eigenframe
/// `U` (after the congruence by `M = P0^{1/2}`), one pair at a time.
pub fn reach_probe(p0: &Spd, lambda: &[f64], u: &Orthogonal, settings: &ProbeSettings) -> Result<ProbeReport> {
    let n = p0.dim();
    if lambda.len() != n || u.dim() != n {
        return Err(Error::invalid(format!("direction and frame must have dimension {n}")));
    }
    let pairs = pair_decomposition(lambda)?;
    let m = p0.sqrt().into_matrix();
    let mi = p0.inv_sqrt().into_matrix();
    let um = u.as_matrix();
    let mut p = p0.as_matrix().clone();
    let mut elapsed = 0.0;
    let mut min_inc = f64::INFINITY;
    let mut note = None;
    let a = settings.pair_level;
    let big = a / settings.leak_ratio;
    'outer: for ((i, j), c) in pairs {
        // with r fixed over a piece, x_i = x_j grows as a + t/2, so log q_i
        // gains log(1 + t / 2a) (plus the leak)
        let piece = 2.0 * a * (c / settings.pieces as f64).exp_m1();
        for _ in 0..settings.pieces {
            if elapsed + piece > settings.t_budget * (1.0 + 1e-12) {
                note = Some(format!("time budget {} exhausted", settings.t_budget));
                break 'outer;
            }
            let q = frame_coordinates(&mi, um, &p);
            let r: Vec<f64> = (0..n).map(|l| if l == i || l == j { a / q[l] } else { big / q[l] }).collect();
            let r_frame = sample::spd_with_spectrum(um, &r);
            let r_total = Symmetric::symmetrize(&(mi.transpose() * r_frame.as_matrix() * &mi));
            let metric = match Spd::from_symmetric(r_total).and_then(MetricR::new) {
                Ok(m) => m,
                Err(e) => {
                    note = Some(format!("control rejected: {e}"));
                    break 'outer;
                }
            };
            let field = DriftField::Metric(metric);
            let dt = piece / settings.substeps as f64;
            for _ in 0..settings.substeps {
                let next = rk4_step(&field, &p, dt)?;
                min_inc = min_inc.min(eigh(&Symmetric::symmetrize(&(&next - &p)))?.min());
                p = next;
            }
            elapsed += piece;
        }
    }
    let q_mat = um.transpose() * &mi * &p * mi.transpose() * um;
    let achieved_log: Vec<f64> = (0..n).map(|l| q_mat[(l, l)].ln()).collect();
    let mut off = q_mat.clone();
    off.fill_diagonal(0.0);
    let expd: Vec<f64> = lambda.iter().map(|v| v.exp()).collect();
    let e = sample::spd_with_spectrum(um, &expd).into_matrix();
    let mult = &m * &e * m.transpose();
    let add = p0.as_matrix() + &e;
    Ok(ProbeReport {
        distance_multiplicative: (&p - mult).norm(),
        distance_additive: (&p - add).norm(),
        endpoint: p,
        elapsed,
        complete: note.is_none(),
        note,
        achieved_log,
        frame_misalignment: off.norm(),
        monotone: !(min_inc <= LOEWNER_TOL),
    })
}

/// Diagonal of `U^T M^{-1} P M^{-T} U`.
fn frame_coordinates(mi: &Matrix, u: &Matrix, p: &Matrix) -> Vec<f64> {
    let q = u.transpose() * mi * p * mi.transpose() * u;
    (0..q.nrows()).map(|l| q[(l, l)]).collect()
}

/// Checks `P_t` increases in the Loewner order along a path: the smallest
/// eigenvalue of `P_{t_{i+1}} - P_{t_i}` over consecutive records.
pub fn loewner_margin(path: &Path) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for w in path.states.windows(2) {
        worst = worst.min(eigh(&Symmetric::symmetrize(&(&w[1] - &w[0])))?.min());
    }
    Ok(worst)
}

/// `J^R(P)` for a control given in either form.
pub fn controlled_drift(p: &Spd, control: &Control) -> Result<Symmetric> {
    drift_j_r(p, &control.metric()?)
}
