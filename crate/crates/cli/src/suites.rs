//! Verification suites behind `orbitflow verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use orbitflow::constants::{self, ConstantCheck, ScalarEstimate, Verdict};
use orbitflow::control::{self, alpha, alpha_jacobian, alpha_sos, cone_sum, integrate_control, random_schedule, Control};
use orbitflow::geom::{drift_j_gradient, drift_j_r, drift_j_spectral, metric_gram, orbit_log_volume, vertical_onb, MetricR};
use orbitflow::matcore::{eigh, numerical_rank, sample, Spd, Symmetric};
use orbitflow::processes::{self, DriftField, EigenKind, ProcessConfig};
use orbitflow::sde::{MeanEstimate, PathStatus, TimeGrid};
use orbitflow::Matrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Constants,
    Invariants,
    EigenConsistency,
    McfMatch,
    Control,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Constants, Suite::Invariants, Suite::EigenConsistency, Suite::McfMatch, Suite::Control];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Constants => "constants",
            Suite::Invariants => "invariants",
            Suite::EigenConsistency => "eigen-consistency",
            Suite::McfMatch => "mcf-match",
            Suite::Control => "control",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            CliError::config(format!("unknown suite `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// `value <= bound`.
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check::new(name, value <= bound, format!("{value:.3e} <= {bound:.0e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        SuiteReport {
            suite: suite.name().into(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Oracle draws per constant.
    pub samples: usize,
    /// Monte Carlo paths.
    pub paths: usize,
    pub threads: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 1,
            samples: 40_000,
            paths: 10_000,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantEntry {
    pub context: String,
    pub paper_location: String,
    pub quantity: String,
    pub paper_value: f64,
    pub derived_value: f64,
    pub oracle_estimate: f64,
    pub oracle_se: f64,
    pub oracle_samples: usize,
    /// `oracle_se / |derived_value|`.
    pub relative_se: f64,
    pub verdict: String,
    pub supporting: Vec<ConstantEntry>,
}

impl From<&ConstantCheck> for ConstantEntry {
    fn from(c: &ConstantCheck) -> Self {
        let ScalarEstimate { value, se, samples } = c.estimate;
        ConstantEntry {
            context: c.context.clone(),
            paper_location: c.location.clone(),
            quantity: c.quantity.clone(),
            paper_value: c.paper_value,
            derived_value: c.derived_value,
            oracle_estimate: value,
            oracle_se: se,
            oracle_samples: samples,
            relative_se: c.estimate.relative_se(c.derived_value),
            verdict: match c.verdict {
                Verdict::Agrees => "agrees",
                Verdict::Diverges => "diverges",
                Verdict::Unresolved => "unresolved",
            }
            .into(),
            supporting: c.supporting.iter().map(ConstantEntry::from).collect(),
        }
    }
}

/// Machine-readable adjudication of the Itô constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub seed: u64,
    pub divergences: Vec<ConstantEntry>,
    pub agreements: Vec<ConstantEntry>,
    pub unresolved: Vec<ConstantEntry>,
}

pub fn constants_report(opts: &SuiteOptions) -> CliResult<ConstantsReport> {
    let checks = constants::adjudicate(opts.samples, opts.seed)?;
    let pick = |v: Verdict| checks.iter().filter(|c| c.verdict == v).map(ConstantEntry::from).collect();
    Ok(ConstantsReport {
        seed: opts.seed,
        divergences: pick(Verdict::Diverges),
        agreements: pick(Verdict::Agrees),
        unresolved: pick(Verdict::Unresolved),
    })
}

fn constants_checks(report: &ConstantsReport) -> Vec<Check> {
    let mut out = vec![
        Check::new(
            "three divergences",
            report.divergences.len() == 3,
            format!("{} divergent entries", report.divergences.len()),
        ),
        Check::new(
            "nothing unresolved",
            report.unresolved.is_empty(),
            format!("{} unresolved entries", report.unresolved.len()),
        ),
    ];
    for d in &report.divergences {
        out.push(Check::new(
            format!("SE below 5%: {}", d.context),
            d.relative_se < 0.05,
            format!(
                "derived {} vs printed {}, estimate {:.4} +- {:.4} ({:.2}%)",
                d.derived_value,
                d.paper_value,
                d.oracle_estimate,
                d.oracle_se,
                100.0 * d.relative_se
            ),
        ));
    }
    out
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn invariants(opts: &SuiteOptions) -> CliResult<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for i in 0..1000 {
        let n = 2 + i % 7;
        let p = sample::random_spd(&mut rng, n, 1e-2, 1e2);
        let tr = drift_j_spectral(&p).trace();
        worst = worst.max((tr - (n * (n - 1)) as f64 / 2.0).abs());
    }
    out.push(Check::at_most("tr J(P) = n(n-1)/2, 1000 P, n = 2..8", worst, 1e-12));

    let (mut grad, mut ito) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let n = 2 + i % 4;
        let m = Matrix::identity(n, n) + sample::gaussian_matrix(&mut rng, n, n) * 0.4;
        let p = Spd::gram_of(&m)?;
        let j = drift_j_spectral(&p);
        grad = grad.max(rel(drift_j_gradient(&m)?.as_matrix(), j.as_matrix()));
        let mut sum = Matrix::zeros(n, n);
        for v in vertical_onb(&m, &MetricR::identity(n))? {
            sum += &v.vector * v.vector.transpose();
        }
        ito = ito.max((sum - j.as_matrix()).norm());
    }
    out.push(Check::at_most("gradient route vs spectral J, 100 P, n = 2..5", grad, 1e-4));
    out.push(Check::at_most("sum over vertical ONB of v v^T = J", ito, 1e-10));

    let mut gram = 0.0f64;
    let mut vol = 0.0f64;
    for _ in 0..100 {
        let p = sample::random_spd(&mut rng, 2, 0.1, 10.0);
        let g = metric_gram(&p, 2)?;
        gram = gram.max((g.as_matrix().determinant() - p.as_matrix().trace() / 2.0).abs());
        let n = rng.random_range(2..6);
        let m = sample::gaussian_matrix(&mut rng, n, n) + Matrix::identity(n, n);
        let q = sample::random_orthogonal(&mut rng, n);
        vol = vol.max((orbit_log_volume(&(&m * q))? - orbit_log_volume(&m)?).abs());
    }
    out.push(Check::at_most("n = 2: det g = tr P / 2", gram, 1e-14));
    out.push(Check::at_most("orbit log-volume right invariance", vol, 1e-10));

    let paths = opts.paths.min(100);
    let cfg = ProcessConfig::new(3, 3, 1.0, 1e-4)?
        .paths(paths)
        .seed(opts.seed)
        .endpoints_only()
        .threads(opts.threads);
    let on = processes::bm_orthogonal(&cfg)?;
    let defect = on.iter().map(|p| orthogonality(p.last())).fold(0.0, f64::max);
    out.push(Check::at_most(format!("O(3) BM ||Q^T Q - I||_F at t = 1, {paths} paths"), defect, 1e-3));
    let gr = processes::bm_grassmann(&ProcessConfig { k: 1, ..cfg })?;
    let idem = gr.iter().map(|p| (p.last() * p.last() - p.last()).norm()).fold(0.0, f64::max);
    out.push(Check::at_most(format!("Grassmann ||P^2 - P||_F at t = 1, {paths} paths"), idem, 1e-3));
    Ok(out)
}

fn orthogonality(q: &Matrix) -> f64 {
    orbitflow::matcore::orthogonality_defect(q)
}

/// Two-sample comparison of the first two moments of each coordinate.
fn moment_checks(label: &str, a: &[Vec<f64>], b: &[Vec<f64>], out: &mut Vec<Check>) {
    let n = a.first().map_or(0, Vec::len);
    for i in 0..n {
        for (m, name) in [(1, "mean"), (2, "second moment")] {
            let xa: Vec<f64> = a.iter().map(|v| v[i].powi(m)).collect();
            let xb: Vec<f64> = b.iter().map(|v| v[i].powi(m)).collect();
            let (ea, eb) = (MeanEstimate::of(&xa), MeanEstimate::of(&xb));
            let se = (ea.se.powi(2) + eb.se.powi(2)).sqrt();
            let z = (ea.mean - eb.mean) / se;
            out.push(Check::new(
                format!("{label}: {name} of l_{}", i + 1),
                z.abs() <= 3.0,
                format!("matrix {:.5} vs eigen SDE {:.5}, z = {z:.2}", ea.mean, eb.mean),
            ));
        }
    }
}

/// Eigenvalue SDEs against eigenvalues of the matrix processes, `n = k = 2`,
/// `t = 0.1`, started at eigenvalues `(16, 4)`.
fn eigen_consistency(opts: &SuiteOptions) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let l0 = [16.0, 4.0];
    let cfg = ProcessConfig::new(2, 2, 0.1, 1e-4)?.paths(opts.paths).endpoints_only().threads(opts.threads);
    let finals = |paths: &[orbitflow::sde::Path]| -> CliResult<Vec<Vec<f64>>> {
        paths
            .iter()
            .filter(|p| p.completed())
            .map(|p| Ok(processes::eigenvalues_of(p)?.pop().expect("recorded endpoint")))
            .collect()
    };
    let w0 = Symmetric::from_diagonal(&[4.0, 2.0]).into_matrix();
    let mat = processes::wishart(&cfg.clone().initial(w0).seed(opts.seed))?;
    let eig = processes::eigen_sde(EigenKind::Wishart, &l0, 2, &cfg.clone().seed(opts.seed + 1))?;
    let stopped = eig.iter().filter(|p| p.status != PathStatus::Completed).count();
    out.push(Check::new(
        "Wishart eigen SDE paths complete",
        stopped == 0,
        format!("{stopped} of {} stopped", eig.len()),
    ));
    let e: Vec<Vec<f64>> = eig.iter().filter(|p| p.status == PathStatus::Completed).map(|p| p.last().to_vec()).collect();
    moment_checks("Wishart", &finals(&mat)?, &e, &mut out);

    let p0 = Symmetric::from_diagonal(&l0).into_matrix();
    let mat = processes::bm_bures_wasserstein(&cfg.clone().initial(p0).seed(opts.seed + 2))?;
    let eig = processes::eigen_sde(EigenKind::BuresWasserstein, &l0, 2, &cfg.clone().seed(opts.seed + 3))?;
    let stopped = mat.iter().filter(|p| !p.completed()).count() + eig.iter().filter(|p| p.status != PathStatus::Completed).count();
    out.push(Check::new("Bures-Wasserstein paths complete", stopped == 0, format!("{stopped} stopped")));
    let e: Vec<Vec<f64>> = eig.iter().filter(|p| p.status == PathStatus::Completed).map(|p| p.last().to_vec()).collect();
    moment_checks("Bures-Wasserstein", &finals(&mat)?, &e, &mut out);
    Ok(out)
}

/// `n = 2` closed form: from `diag(3, 1)` the flow doubles `P` by `t = 4`.
fn mcf_match(opts: &SuiteOptions) -> CliResult<Vec<Check>> {
    let mut out = Vec::new();
    let p0 = Spd::from_diagonal(&[3.0, 1.0])?;
    let target = p0.as_matrix() * 2.0;
    let ode = processes::mcf_ode(&p0, &DriftField::Spectral, &TimeGrid::new(0.0, 4.0, 400)?)?;
    out.push(Check::at_most("mcf ODE reaches 2 P0 at t = 4", (ode.last() - &target).norm(), 1e-6));
    let m0 = p0.sqrt().into_matrix();
    let cfg = ProcessConfig::new(2, 2, 4.0, 1e-4)?.seed(opts.seed).endpoints_only();
    let (_, image) = processes::vertical_bm(&m0, &cfg)?;
    out.push(Check::at_most(
        "vertical BM image reaches 2 P0 at t = 4 (relative)",
        rel(image[0].last(), &target),
        0.02,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let m0 = Matrix::identity(3, 3) + sample::gaussian_matrix(&mut rng, 3, 3) * 0.3;
    let cfg = ProcessConfig::new(3, 3, 1.0, 1e-4)?.seed(opts.seed).endpoints_only();
    let (_, image) = processes::vertical_bm(&m0, &cfg)?;
    let ode = processes::mcf_ode(&Spd::gram_of(&m0)?, &DriftField::Spectral, &TimeGrid::new(0.0, 1.0, 200)?)?;
    out.push(Check::at_most(
        "n = 3 vertical BM image tracks the ODE (relative)",
        rel(image[0].last(), ode.last()),
        0.02,
    ));
    Ok(out)
}

fn control_suite(opts: &SuiteOptions) -> CliResult<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::new();

    let mut exact = true;
    let mut neg_def = true;
    let mut worst_top = f64::NEG_INFINITY;
    for i in 0..1000 {
        let n = 3 + i % 4;
        let l: Vec<f64> = (0..n).map(|_| (rng.random_range(-4.0..4.0f64)).exp()).collect();
        exact &= alpha(&l)? == cone_sum(&l)?;
        let top = eigh(&alpha_jacobian(&l)?)?.values[0];
        worst_top = worst_top.max(top);
        neg_def &= top < 0.0;
    }
    out.push(Check::new("alpha equals the pair-cone sum bitwise, 1000 lambda", exact, ""));
    out.push(Check::new(
        "alpha Jacobian negative definite, n = 3..6, 1000 lambda",
        neg_def,
        format!("largest eigenvalue {worst_top:.3e}"),
    ));
    let mut singular = true;
    for _ in 0..100 {
        let l = [rng.random_range(0.1..10.0), rng.random_range(0.1..10.0)];
        singular &= alpha_jacobian(&l)?.as_matrix().determinant() == 0.0;
    }
    out.push(Check::new("alpha Jacobian singular at n = 2", singular, ""));

    let (mut resid, mut ladder) = (0.0f64, true);
    for i in 0..100 {
        let n = 2 + i % 5;
        let l: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let factors = alpha_sos(&l)?;
        let mut sum = alpha_jacobian(&l)?.into_matrix();
        for (r, f) in factors.iter().enumerate() {
            sum += f * f.transpose();
            ladder &= numerical_rank(f, 1e-10) == n - 1 - r;
        }
        resid = resid.max(sum.norm());
    }
    out.push(Check::at_most("sum-of-squares residual", resid, 1e-12));
    out.push(Check::new("sum-of-squares rank ladder n-1, ..., 1", ladder, ""));

    let mut margin = f64::INFINITY;
    for _ in 0..100 {
        let schedule = random_schedule(&mut rng, 3, 20);
        let p0 = sample::random_spd(&mut rng, 3, 0.3, 3.0);
        margin = margin.min(integrate_control(&p0, &schedule, 10)?.min_increment_eigenvalue);
    }
    out.push(Check::new(
        "Loewner monotonicity over 100 schedules",
        margin > control::LOEWNER_TOL,
        format!("min lambda_min(dP) = {margin:.3e}"),
    ));

    let mut conj = 0.0f64;
    for i in 0..100 {
        let n = 2 + i % 4;
        let g = Matrix::identity(n, n) + sample::gaussian_matrix(&mut rng, n, n) * 0.4;
        let p = sample::random_spd(&mut rng, n, 0.3, 3.0);
        let gi = g.clone().try_inverse().ok_or_else(|| CliError::Failed("singular control factor".into()))?;
        let inner = Spd::from_symmetric(Symmetric::symmetrize(&(g.transpose() * p.as_matrix() * &g)))?;
        let want = gi.transpose() * drift_j_spectral(&inner).as_matrix() * &gi;
        let got = drift_j_r(&p, &Control::G(g).metric()?)?;
        conj = conj.max(rel(got.as_matrix(), &want));
    }
    out.push(Check::at_most("conjugation identity J^{GG^T}(P) = G^{-T} J(G^T P G) G^{-1}", conj, 1e-10));
    Ok(out)
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> CliResult<(SuiteReport, Option<ConstantsReport>)> {
    Ok(match suite {
        Suite::Constants => {
            let report = constants_report(opts)?;
            (SuiteReport::new(suite, constants_checks(&report)), Some(report))
        }
        Suite::Invariants => (SuiteReport::new(suite, invariants(opts)?), None),
        Suite::EigenConsistency => (SuiteReport::new(suite, eigen_consistency(opts)?), None),
        Suite::McfMatch => (SuiteReport::new(suite, mcf_match(opts)?), None),
        Suite::Control => (SuiteReport::new(suite, control_suite(opts)?), None),
    })
}
