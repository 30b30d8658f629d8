use std::collections::BTreeMap;
use std::fmt::Write as _;

use orbitflow::control::{integrate_control, ControlSchedule};
use orbitflow::geom::{drift_j_gradient, drift_j_r, drift_j_spectral, orbit_log_volume, MetricR};
use orbitflow::matcore::{eigh, fd_gradient, truncation, Spd, Symmetric};
use orbitflow::sde::{qv_oracle, MatrixEstimate, NoiseShape, NoiseSource};
use orbitflow::Matrix;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::{blob_hash, OutputDir};
use crate::settings::{threads_from_env, Settings};
use crate::suites::{self, Suite, SuiteOptions};
use crate::svg::{line_chart, Series};
use crate::{ControlArgs, DriftArgs, OracleArgs, SimulateArgs, VerifyArgs};

pub mod simulate;

pub fn simulate_cmd(a: SimulateArgs) -> CliResult<()> {
    let (mut s, config_bytes) = match &a.config {
        Some(p) => {
            let (s, b) = Settings::load(p)?;
            (s, Some((p.display().to_string(), b)))
        }
        None => (Settings::default(), None),
    };
    s.set("process", a.process);
    s.set("n", a.n);
    s.set("k", a.k);
    s.set("t", a.t);
    s.set("dt", a.dt);
    s.set("paths", a.paths);
    s.set("seed", a.seed);
    s.set("out", a.out.map(|p| p.display().to_string()));
    s.set("record-every", a.record_every);
    s.set("noise-scale", a.noise_scale);
    s.set("init", a.init);
    s.set_flag("endpoints-only", a.endpoints_only);
    let mut run = simulate::resolve(&s)?;
    if let Some((name, bytes)) = config_bytes {
        run.inputs.insert(format!("config:{name}"), blob_hash(&bytes));
    }
    simulate::execute(&run)
}

fn spd_arg(arg: &str, what: &str) -> CliResult<(Spd, Option<Vec<u8>>)> {
    let (m, bytes) = csvio::matrix_arg(arg)?;
    let spd = Spd::new(m).map_err(|e| CliError::config(format!("{what} must be symmetric positive definite: {e}")))?;
    Ok((spd, bytes))
}

pub fn drift_cmd(a: DriftArgs) -> CliResult<()> {
    let (p, _) = spd_arg(&a.input, "--input")?;
    let j = match a.which.as_str() {
        "spectral" => drift_j_spectral(&p),
        "gradient" => drift_j_gradient(p.sqrt().as_matrix())?,
        "J-R" | "j-r" => {
            let r =
                a.r.as_deref()
                    .ok_or_else(|| CliError::config("--which J-R needs --R (diag(...) or a CSV file)"))?;
            let (r, _) = spd_arg(r, "--R")?;
            if r.dim() != p.dim() {
                return Err(CliError::config(format!("--R is {0}x{0} but --input is {1}x{1}", r.dim(), p.dim())));
            }
            drift_j_r(&p, &MetricR::new(r)?)?
        }
        other => return Err(CliError::config(format!("unknown drift `{other}`; expected spectral, gradient or J-R"))),
    };
    let text = csvio::matrix_csv(j.as_matrix());
    match a.out {
        Some(path) => csvio::write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn verify_cmd(a: VerifyArgs) -> CliResult<()> {
    let suite = Suite::parse(&a.suite)?;
    let defaults = SuiteOptions::default();
    let opts = SuiteOptions {
        seed: a.seed.unwrap_or(defaults.seed),
        samples: a.samples.unwrap_or(defaults.samples),
        paths: a.paths.unwrap_or(defaults.paths),
        threads: threads_from_env()?,
    };
    if opts.samples < 2 || opts.paths < 2 {
        return Err(CliError::config("--samples and --paths must be at least 2"));
    }
    let (report, constants) = suites::run_suite(suite, &opts)?;
    let mut lines = String::new();
    for c in &report.checks {
        let _ = writeln!(
            lines,
            "{} {}{}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) }
        );
    }
    let constants_json = constants.as_ref().map(|c| serde_json::to_string_pretty(c).expect("report serializes") + "\n");
    match &constants_json {
        // the report itself goes to stdout, the check lines to stderr
        Some(json) => {
            print!("{json}");
            eprint!("{lines}");
        }
        None => print!("{lines}"),
    }
    if let Some(dir) = &a.out {
        let mut out = OutputDir::create(dir)?;
        out.write(
            &format!("{}.json", suite.name()),
            &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
        )?;
        if let Some(json) = &constants_json {
            out.write("constants_report.json", json)?;
        }
        let mut cfg = BTreeMap::new();
        cfg.insert("suite".into(), suite.name().into());
        cfg.insert("seed".into(), opts.seed.to_string());
        cfg.insert("samples".into(), opts.samples.to_string());
        cfg.insert("paths".into(), opts.paths.to_string());
        out.finish("verify", cfg, BTreeMap::new())?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(CliError::Failed(format!("suite {}: {failed} check(s) failed", suite.name())))
    }
}

pub fn control_cmd(a: ControlArgs) -> CliResult<()> {
    let sched_bytes = std::fs::read(&a.schedule).map_err(|e| CliError::config(format!("cannot read schedule {}: {e}", a.schedule.display())))?;
    let text = String::from_utf8(sched_bytes.clone()).map_err(|_| CliError::config("schedule file is not UTF-8"))?;
    let schedule = ControlSchedule::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", a.schedule.display())))?;
    let (p0, p0_bytes) = spd_arg(&a.p0, "--P0")?;
    if schedule.dim() != p0.dim() {
        return Err(CliError::config(format!(
            "schedule controls are {0}x{0} but P0 is {1}x{1}",
            schedule.dim(),
            p0.dim()
        )));
    }
    if a.substeps == 0 {
        return Err(CliError::config("--substeps must be at least 1"));
    }
    let run = integrate_control(&p0, &schedule, a.substeps)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write("path.csv", &csvio::path_csv(&run.path))?;
    let eig: Vec<Vec<f64>> = run
        .path
        .states
        .iter()
        .map(|p| Ok(eigh(&Symmetric::symmetrize(p))?.values))
        .collect::<CliResult<_>>()?;
    let n = p0.dim();
    let cols: Vec<Vec<f64>> = (0..n).map(|i| eig.iter().map(|v| v[i]).collect()).collect();
    let names: Vec<String> = (1..=n).map(|i| format!("l_{i}")).collect();
    let table: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(cols.iter().map(Vec::as_slice)).collect();
    out.write("eigen.csv", &csvio::series_csv(&run.path.times, &table))?;
    let series: Vec<Series> = names.iter().zip(&cols).map(|(l, c)| Series::new(l.clone(), &run.path.times, c)).collect();
    out.write("summary.svg", &line_chart("controlled eigenvalues", "t", "eigenvalue", &series))?;
    out.note(format!("min lambda_min(P(t+dt) - P(t)) = {:e}", run.min_increment_eigenvalue));
    let mut cfg = BTreeMap::new();
    cfg.insert("schedule".into(), a.schedule.display().to_string());
    cfg.insert("P0".into(), a.p0.clone());
    cfg.insert("substeps".into(), a.substeps.to_string());
    cfg.insert("out".into(), a.out.display().to_string());
    let mut inputs = BTreeMap::new();
    inputs.insert(format!("schedule:{}", a.schedule.display()), blob_hash(&sched_bytes));
    if let Some(b) = p0_bytes {
        inputs.insert(format!("P0:{}", a.p0), blob_hash(&b));
    }
    out.finish("control", cfg, inputs)?;
    println!(
        "{} segments, T = {}, min lambda_min(dP) = {:e}",
        schedule.segments.len(),
        schedule.total_duration(),
        run.min_increment_eigenvalue
    );
    if run.monotone {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "Loewner monotonicity violated: lambda_min(dP) = {:e}",
            run.min_increment_eigenvalue
        )))
    }
}

fn estimate_rows(out: &mut String, label: &str, est: &MatrixEstimate) {
    for i in 0..est.mean.nrows() {
        for j in 0..est.mean.ncols() {
            let _ = writeln!(out, "{label},{i},{j},{},{}", csvio::fmt(est.mean[(i, j)]), csvio::fmt(est.se[(i, j)]));
        }
    }
}

pub fn oracle_cmd(a: OracleArgs) -> CliResult<()> {
    let text = match a.target.as_str() {
        "qv" => {
            let process = a.process.as_deref().ok_or_else(|| CliError::config("--target qv needs --process"))?;
            let n = a.n;
            if n < 2 {
                return Err(CliError::config("--n must be at least 2"));
            }
            let source = NoiseSource::new(a.seed);
            let k = a.k.unwrap_or(if process == "grassmann" { 1 } else { n });
            if k == 0 || k > n {
                return Err(CliError::config(format!("need 1 <= k <= n, got k = {k}")));
            }
            let est = match process {
                "sphere-vertical" => {
                    let mut x = Matrix::zeros(n, 1);
                    x[(0, 0)] = 1.0;
                    qv_oracle(
                        |x, dw| Ok(dw - x * (x.dot(dw) / x.norm_squared())),
                        &x,
                        NoiseShape::Gaussian { rows: n, cols: 1 },
                        a.dt,
                        a.samples,
                        &source,
                    )?
                }
                "on-bm" => qv_oracle(
                    |_, da| Ok(da.clone()),
                    &Matrix::identity(n, n),
                    NoiseShape::Skew { n },
                    a.dt,
                    a.samples,
                    &source,
                )?,
                "grassmann" => {
                    let d = truncation(n, k);
                    let p = &d * d.transpose();
                    qv_oracle(|p, db| Ok(db * p - p * db), &p, NoiseShape::Skew { n }, a.dt, a.samples, &source)?
                }
                "wishart" => qv_oracle(
                    |_, dw| Ok(dw.clone()),
                    &truncation(n, k),
                    NoiseShape::Gaussian { rows: n, cols: k },
                    a.dt,
                    a.samples,
                    &source,
                )?,
                "cartan-hadamard" => qv_oracle(
                    |g, dw| Ok(g * dw),
                    &Matrix::identity(n, n),
                    NoiseShape::Gaussian { rows: n, cols: n },
                    a.dt,
                    a.samples,
                    &source,
                )?,
                other => {
                    return Err(CliError::config(format!(
                        "oracle qv does not know `{other}`; expected sphere-vertical, on-bm, grassmann, wishart or cartan-hadamard"
                    )))
                }
            };
            let mut text = String::from("quantity,i,j,mean,se\n");
            estimate_rows(&mut text, "outer", &est.outer);
            estimate_rows(&mut text, "inner", &est.inner);
            if let Some(sq) = &est.square {
                estimate_rows(&mut text, "square", sq);
            }
            text
        }
        "fd-gradient" => {
            let input = a.input.as_deref().ok_or_else(|| CliError::config("--target fd-gradient needs --input"))?;
            let (m, _) = csvio::matrix_arg(input)?;
            let g = match a.function.as_deref() {
                Some("log-det") => fd_gradient(|x| Ok(x.determinant().abs().ln()), &m, None)?,
                Some("orbit-log-volume") => fd_gradient(orbit_log_volume, &m, None)?,
                Some(other) => return Err(CliError::config(format!("unknown function `{other}`; expected log-det or orbit-log-volume"))),
                None => return Err(CliError::config("--target fd-gradient needs --function")),
            };
            csvio::matrix_csv(&g)
        }
        other => return Err(CliError::config(format!("unknown oracle target `{other}`; expected qv or fd-gradient"))),
    };
    match a.out {
        Some(p) => csvio::write(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
