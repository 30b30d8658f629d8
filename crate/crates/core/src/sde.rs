//! Matrix SDE integration: seeded noise, Euler–Maruyama (Itô) and Heun
//! (Stratonovich) steppers, path ensembles and a quadratic-variation oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{Matrix, Skew};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    /// Keep every `record_every`-th node (the last node is always kept).
    pub record_every: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid(format!("time grid needs t1 > t0, got [{t0}, {t1}]")));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(TimeGrid {
            t0,
            t1,
            steps,
            record_every: 1,
        })
    }

    /// Grid on `[0, t]` with step as close to `dt` as an integer count allows.
    pub fn with_dt(t: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        let steps = (t / dt).round().max(1.0) as usize;
        TimeGrid::new(0.0, t, steps)
    }

    pub fn recording(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    /// Only the first and last nodes are kept.
    pub fn endpoints_only(self) -> Self {
        let s = self.steps;
        self.recording(s)
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt()
    }

    pub fn records(&self, step: usize) -> bool {
        step.is_multiple_of(self.record_every) || step == self.steps
    }
}

/// Counter-based Gaussian noise: the variates for `(seed, path, step)` come
/// from a ChaCha8 stream keyed by those three integers, so a draw never
/// depends on scheduling or on other paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSource {
    pub seed: u64,
    /// Multiplies every increment; 0 switches the noise off.
    pub scale: f64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource { seed, scale: 1.0 }
    }

    pub fn silent() -> Self {
        NoiseSource { seed: 0, scale: 0.0 }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn stream(&self, path: u64, step: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&path.to_le_bytes());
        key[16..24].copy_from_slice(&step.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }

    /// `count` i.i.d. N(0, var) values for `(path, step)`.
    pub fn normals(&self, path: u64, step: u64, count: usize, var: f64) -> Vec<f64> {
        let s = self.scale * var.sqrt();
        if s == 0.0 {
            return vec![0.0; count];
        }
        let mut rng = self.stream(path, step);
        (0..count)
            .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect()
    }

    /// Entries i.i.d. N(0, dt), filled column-major from the stream.
    pub fn gaussian_increment(&self, path: u64, step: u64, rows: usize, cols: usize, dt: f64) -> Matrix {
        Matrix::from_vec(rows, cols, self.normals(path, step, rows * cols, dt))
    }

    /// Skew matrix with upper entries i.i.d. N(0, dt/2) (i < j, row-major).
    pub fn skew_increment(&self, path: u64, step: u64, n: usize, dt: f64) -> Skew {
        let draws = self.normals(path, step, n * n.saturating_sub(1) / 2, dt / 2.0);
        let mut a = Matrix::zeros(n, n);
        for ((i, j), v) in crate::matcore::pairs(n).zip(draws) {
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
        Skew::new(a).expect("reflected entries are skew")
    }

    /// Increment of the given shape.
    pub fn increment(&self, shape: NoiseShape, path: u64, step: u64, dt: f64) -> Matrix {
        match shape {
            NoiseShape::Gaussian { rows, cols } => self.gaussian_increment(path, step, rows, cols, dt),
            NoiseShape::Skew { n } => self.skew_increment(path, step, n, dt).into_matrix(),
            NoiseShape::Vector { len } => self.gaussian_increment(path, step, len, 1, dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseShape {
    /// `rows x cols` matrix with i.i.d. N(0, dt) entries.
    Gaussian { rows: usize, cols: usize },
    /// so(n) increment with N(0, dt/2) above the diagonal.
    Skew { n: usize },
    /// Column of `len` independent N(0, dt) coordinates (e.g. Lie-basis weights).
    Vector { len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Ito,
    Stratonovich,
}

pub type DriftFn = Box<dyn Fn(f64, &Matrix) -> Result<Matrix> + Send + Sync>;
pub type DiffusionFn = Box<dyn Fn(f64, &Matrix, &Matrix) -> Result<Matrix> + Send + Sync>;
pub type GuardFn = Box<dyn Fn(&Matrix) -> Option<String> + Send + Sync>;
pub type ReprojectFn = Box<dyn Fn(Matrix) -> Matrix + Send + Sync>;

/// `dX = b(t, X) dt + sigma(t, X)[dW]`, with `sigma` linear in the increment.
pub struct SdeProblem {
    pub manifold: String,
    pub initial: Matrix,
    pub formulation: Formulation,
    pub noise: NoiseShape,
    pub drift: DriftFn,
    pub diffusion: DiffusionFn,
    pub guard: Option<GuardFn>,
    pub reproject: Option<ReprojectFn>,
}

impl SdeProblem {
    pub fn new(manifold: impl Into<String>, initial: Matrix, formulation: Formulation, noise: NoiseShape) -> Self {
        SdeProblem {
            manifold: manifold.into(),
            initial,
            formulation,
            noise,
            drift: Box::new(|_, x| Ok(Matrix::zeros(x.nrows(), x.ncols()))),
            diffusion: Box::new(|_, x, _| Ok(Matrix::zeros(x.nrows(), x.ncols()))),
            guard: None,
            reproject: None,
        }
    }

    pub fn drift(mut self, f: impl Fn(f64, &Matrix) -> Result<Matrix> + Send + Sync + 'static) -> Self {
        self.drift = Box::new(f);
        self
    }

    pub fn diffusion(mut self, f: impl Fn(f64, &Matrix, &Matrix) -> Result<Matrix> + Send + Sync + 'static) -> Self {
        self.diffusion = Box::new(f);
        self
    }

    pub fn guard(mut self, f: impl Fn(&Matrix) -> Option<String> + Send + Sync + 'static) -> Self {
        self.guard = Some(Box::new(f));
        self
    }

    pub fn reproject(mut self, f: impl Fn(Matrix) -> Matrix + Send + Sync + 'static) -> Self {
        self.reproject = Some(Box::new(f));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathStatus {
    Completed,
    /// The guard rejected the state reached at `step`; the path ends at the
    /// last accepted state.
    Stopped {
        step: usize,
        time: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub manifold: String,
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    pub states: Vec<Matrix>,
    pub status: PathStatus,
}

impl Path {
    pub fn last(&self) -> &Matrix {
        self.states.last().expect("a path holds at least its initial state")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("a path holds at least its initial time")
    }

    pub fn completed(&self) -> bool {
        self.status == PathStatus::Completed
    }

    /// Applies `f` to every recorded state.
    pub fn map_states(self, manifold: impl Into<String>, f: impl Fn(&Matrix) -> Matrix) -> Path {
        Path {
            manifold: manifold.into(),
            states: self.states.iter().map(f).collect(),
            ..self
        }
    }
}

fn check_state(x: &Matrix, step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

fn check_shape(out: &Matrix, x: &Matrix, what: &str) -> Result<()> {
    if out.shape() != x.shape() {
        return Err(Error::Shape {
            expected: format!("{} {}x{}", what, x.nrows(), x.ncols()),
            got: crate::matcore::shape_str(out),
        });
    }
    Ok(())
}

/// One scheme step from `x` at time `t` with increment `dw`.
pub fn step(problem: &SdeProblem, t: f64, dt: f64, x: &Matrix, dw: &Matrix) -> Result<Matrix> {
    let f0 = (problem.drift)(t, x)?;
    let g0 = (problem.diffusion)(t, x, dw)?;
    check_shape(&f0, x, "drift")?;
    check_shape(&g0, x, "diffusion")?;
    match problem.formulation {
        Formulation::Ito => Ok(x + f0 * dt + g0),
        Formulation::Stratonovich => {
            let pred = x + &f0 * dt + &g0;
            let f1 = (problem.drift)(t + dt, &pred)?;
            let g1 = (problem.diffusion)(t + dt, &pred, dw)?;
            Ok(x + (f0 + f1) * (0.5 * dt) + (g0 + g1) * 0.5)
        }
    }
}

/// Integrates one path. Itô problems use Euler–Maruyama, Stratonovich
/// problems the Heun predictor-corrector.
pub fn integrate(problem: &SdeProblem, grid: &TimeGrid, source: &NoiseSource, path_index: u64) -> Result<Path> {
    let dt = grid.dt();
    let mut x = problem.initial.clone();
    check_state(&x, 0)?;
    let mut times = vec![grid.t0];
    let mut states = vec![x.clone()];
    let mut status = PathStatus::Completed;
    let mut recorded = 0;
    for s in 0..grid.steps {
        let t = grid.time(s);
        let dw = source.increment(problem.noise, path_index, s as u64, dt);
        let mut next = step(problem, t, dt, &x, &dw)?;
        if let Some(r) = &problem.reproject {
            next = r(next);
        }
        check_state(&next, s + 1)?;
        if let Some(reason) = problem.guard.as_ref().and_then(|g| g(&next)) {
            if recorded != s {
                times.push(t);
                states.push(x.clone());
            }
            status = PathStatus::Stopped {
                step: s + 1,
                time: grid.time(s + 1),
                reason,
            };
            break;
        }
        x = next;
        if grid.records(s + 1) {
            times.push(grid.time(s + 1));
            states.push(x.clone());
            recorded = s + 1;
        }
    }
    Ok(Path {
        manifold: problem.manifold.clone(),
        grid: *grid,
        times,
        states,
        status,
    })
}

/// Runs `job(path_index)` for `0..paths`, in parallel, results in index order.
/// `threads = None` uses the global rayon pool.
pub fn ensemble<T, F>(paths: usize, threads: Option<usize>, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || (0..paths as u64).into_par_iter().map(&job).collect::<Result<Vec<T>>>();
    match threads {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run),
    }
}

/// Pairwise (cascade) sum; the grouping is fixed by the length alone.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

impl MeanEstimate {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len();
        let mean = pairwise_sum(v) / n as f64;
        let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        MeanEstimate {
            mean,
            se: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// `|mean - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }

    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }
}

/// Entrywise Monte Carlo estimate of a matrix expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate {
    pub mean: Matrix,
    pub se: Matrix,
    pub samples: usize,
}

impl MatrixEstimate {
    pub fn of(samples: &[Matrix]) -> Self {
        let (r, c) = samples[0].shape();
        let mut mean = Matrix::zeros(r, c);
        let mut se = Matrix::zeros(r, c);
        let mut col = vec![0.0; samples.len()];
        for j in 0..c {
            for i in 0..r {
                for (slot, s) in col.iter_mut().zip(samples) {
                    *slot = s[(i, j)];
                }
                let e = MeanEstimate::of(&col);
                mean[(i, j)] = e.mean;
                se[(i, j)] = e.se;
            }
        }
        MatrixEstimate {
            mean,
            se,
            samples: samples.len(),
        }
    }

    /// Every entry within `k` standard errors of `target` (entries with zero
    /// spread must match to `1e-12`).
    pub fn within(&self, target: &Matrix, k: f64) -> bool {
        self.mean
            .iter()
            .zip(self.se.iter())
            .zip(target.iter())
            .all(|((m, s), t)| (m - t).abs() <= (k * s).max(1e-12))
    }
}

/// Quadratic-variation estimates at a fixed state, all divided by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct QvEstimate {
    /// `E[dX dX^T] / dt`.
    pub outer: MatrixEstimate,
    /// `E[dX^T dX] / dt`.
    pub inner: MatrixEstimate,
    /// `E[dX dX] / dt`, square states only.
    pub square: Option<MatrixEstimate>,
}

/// Estimates the quadratic variation of `dX = sigma(X)[dW]` at `state` from
/// `samples` fresh increments.
pub fn qv_oracle<F>(diffusion: F, state: &Matrix, noise: NoiseShape, dt: f64, samples: usize, source: &NoiseSource) -> Result<QvEstimate>
where
    F: Fn(&Matrix, &Matrix) -> Result<Matrix>,
{
    if samples < 2 {
        return Err(Error::invalid("quadratic-variation oracle needs at least two samples"));
    }
    let mut outer = Vec::with_capacity(samples);
    let mut inner = Vec::with_capacity(samples);
    let mut square = Vec::new();
    let is_square = state.nrows() == state.ncols();
    for s in 0..samples {
        let dw = source.increment(noise, 0, s as u64, dt);
        let dx = diffusion(state, &dw)?;
        check_shape(&dx, state, "diffusion")?;
        outer.push(&dx * dx.transpose() / dt);
        inner.push(dx.transpose() * &dx / dt);
        if is_square {
            square.push(&dx * &dx / dt);
        }
    }
    Ok(QvEstimate {
        outer: MatrixEstimate::of(&outer),
        inner: MatrixEstimate::of(&inner),
        square: is_square.then(|| MatrixEstimate::of(&square)),
    })
}
