use std::collections::BTreeMap;
use std::path::PathBuf;

use orbitflow::processes::{self, EigenKind, EigenPath, ProcessConfig};
use orbitflow::sde::{Path, PathStatus};
use orbitflow::Matrix;

use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::manifest::{blob_hash, OutputDir};
use crate::settings::{threads_from_env, Settings};
use crate::svg::{line_chart, Series};

pub const KEYS: &[&str] = &[
    "process",
    "n",
    "k",
    "t",
    "dt",
    "paths",
    "seed",
    "out",
    "record-every",
    "noise-scale",
    "init",
    "endpoints-only",
];

/// Series plotted per chart at most.
const PLOTTED_PATHS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    OnBm,
    Stiefel,
    Grassmann,
    Poincare,
    CartanHadamard,
    Wishart,
    BwBm,
    VerticalBm,
    SphereVertical,
    EigenWishart,
    EigenBw,
}

impl Process {
    pub const ALL: [Process; 11] = [
        Process::OnBm,
        Process::Stiefel,
        Process::Grassmann,
        Process::Poincare,
        Process::CartanHadamard,
        Process::Wishart,
        Process::BwBm,
        Process::VerticalBm,
        Process::SphereVertical,
        Process::EigenWishart,
        Process::EigenBw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Process::OnBm => "on-bm",
            Process::Stiefel => "stiefel",
            Process::Grassmann => "grassmann",
            Process::Poincare => "poincare",
            Process::CartanHadamard => "cartan-hadamard",
            Process::Wishart => "wishart",
            Process::BwBm => "bw-bm",
            Process::VerticalBm => "vertical-bm",
            Process::SphereVertical => "sphere-vertical",
            Process::EigenWishart => "eigen-wishart",
            Process::EigenBw => "eigen-bw",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Process::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Process::ALL.iter().map(|p| p.name()).collect();
            CliError::config(format!("unknown process `{s}`; expected one of {}", names.join(", ")))
        })
    }

    fn uses_k(self) -> bool {
        matches!(
            self,
            Process::Stiefel | Process::Grassmann | Process::Wishart | Process::BwBm | Process::VerticalBm | Process::EigenWishart | Process::EigenBw
        )
    }

    fn default_k(self, n: usize) -> usize {
        match self {
            Process::Stiefel | Process::Grassmann => 1,
            _ => n,
        }
    }

    /// `--init` is a comma list rather than a matrix.
    fn vector_init(self) -> bool {
        matches!(self, Process::Poincare | Process::SphereVertical | Process::EigenWishart | Process::EigenBw)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub process: Process,
    pub cfg: ProcessConfig,
    pub out: PathBuf,
    pub init_vector: Option<Vec<f64>>,
    /// Resolved settings echoed into the manifest.
    pub resolved: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
}

fn bad(e: orbitflow::Error) -> CliError {
    CliError::config(e.to_string())
}

/// Validates settings against the process schema.
pub fn resolve(settings: &Settings) -> CliResult<SimRun> {
    settings.allow_only(KEYS, "simulate")?;
    let process = Process::parse(&settings.require::<String>("process")?)?;
    let n = match process {
        Process::Poincare => {
            let n = settings.get_or("n", 2usize)?;
            if n != 2 {
                return Err(CliError::config("poincare lives on the upper half-plane: --n must be 2"));
            }
            n
        }
        _ => settings.require::<usize>("n")?,
    };
    let min_n = match process {
        Process::OnBm | Process::SphereVertical | Process::EigenWishart | Process::EigenBw | Process::Grassmann => 2,
        _ => 1,
    };
    if n < min_n {
        return Err(CliError::config(format!("{} needs --n >= {min_n}", process.name())));
    }
    let k = if process.uses_k() {
        settings.get_or("k", process.default_k(n))?
    } else if settings.contains("k") {
        return Err(CliError::config(format!("{} does not take --k", process.name())));
    } else {
        n
    };
    if k == 0 || k > n || (process == Process::Grassmann && k == n) {
        return Err(CliError::config(format!(
            "{}: need 1 <= k {} n, got k = {k}, n = {n}",
            process.name(),
            if process == Process::Grassmann { "<" } else { "<=" }
        )));
    }
    let t: f64 = settings.get_or("t", 1.0)?;
    let dt: f64 = settings.get_or("dt", 1e-3)?;
    let paths: usize = settings.get_or("paths", 1)?;
    if paths == 0 {
        return Err(CliError::config("--paths must be at least 1"));
    }
    let seed: u64 = settings.get_or("seed", 0)?;
    let record_every: usize = settings.get_or("record-every", 1)?;
    let noise_scale: f64 = settings.get_or("noise-scale", 1.0)?;
    let endpoints_only = settings.flag("endpoints-only")?;
    let out: PathBuf = settings.require("out")?;

    let mut cfg = ProcessConfig::new(n, k, t, dt)
        .map_err(bad)?
        .paths(paths)
        .seed(seed)
        .noise_scale(noise_scale)
        .record_every(record_every)
        .threads(threads_from_env()?);
    if endpoints_only {
        cfg = cfg.endpoints_only();
    }

    let mut inputs = BTreeMap::new();
    let mut init_vector = None;
    if let Some(init) = settings.raw("init") {
        if process.vector_init() {
            let v = csvio::parse_list(init)?;
            let want = if process == Process::Poincare { 2 } else { n };
            if v.len() != want {
                return Err(CliError::config(format!(
                    "--init for {} needs {want} comma-separated values, got {}",
                    process.name(),
                    v.len()
                )));
            }
            if process == Process::Poincare {
                cfg = cfg.initial(Matrix::from_row_slice(1, 2, &v));
            }
            init_vector = Some(v);
        } else {
            let (m, bytes) = csvio::matrix_arg(init)?;
            if let Some(b) = bytes {
                inputs.insert(format!("init:{init}"), blob_hash(&b));
            }
            cfg = cfg.initial(m);
        }
    }

    let mut resolved = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        resolved.insert(k.to_string(), v);
    };
    put("process", process.name().into());
    put("n", n.to_string());
    put("k", k.to_string());
    put("t", t.to_string());
    put("dt", dt.to_string());
    put("paths", paths.to_string());
    put("seed", seed.to_string());
    put("record-every", cfg.record_every.to_string());
    put("noise-scale", noise_scale.to_string());
    put("out", out.display().to_string());
    if let Some(init) = settings.raw("init") {
        put("init", init.to_string());
    }
    Ok(SimRun {
        process,
        cfg,
        out,
        init_vector,
        resolved,
        inputs,
    })
}

fn default_eigenvalues(n: usize) -> Vec<f64> {
    (0..n).map(|i| 4.0 * ((n - i) as f64).powi(2)).collect()
}

enum Output {
    Matrices(Vec<Path>),
    Vertical(Vec<Path>, Vec<Path>),
    Sphere(Vec<(Path, Vec<f64>)>),
    Eigen(Vec<EigenPath>),
}

fn index_width(paths: usize) -> usize {
    paths.saturating_sub(1).to_string().len().max(4)
}

fn status_row(i: usize, status: &PathStatus, last_time: f64, notes: &mut Vec<String>) -> String {
    if let PathStatus::Stopped { step, time, reason } = status {
        notes.push(format!("path {i} stopped at step {step} (t = {time}): {reason}"));
    }
    let completed = matches!(status, PathStatus::Completed);
    format!("{i},{},{}\n", u8::from(completed), csvio::fmt(last_time))
}

fn trace_series(paths: &[Path], label: &str) -> Vec<Series> {
    paths
        .iter()
        .take(PLOTTED_PATHS)
        .enumerate()
        .map(|(i, p)| {
            let y: Vec<f64> = p.states.iter().map(|m| if m.is_square() { m.trace() } else { m[(0, 0)] }).collect();
            Series::new(format!("{label} path {i}"), &p.times, &y)
        })
        .collect()
}

pub fn execute(run: &SimRun) -> CliResult<()> {
    let cfg = &run.cfg;
    let output = match run.process {
        Process::OnBm => Output::Matrices(processes::bm_orthogonal(cfg)?),
        Process::Stiefel => Output::Matrices(processes::bm_stiefel(cfg)?),
        Process::Grassmann => Output::Matrices(processes::bm_grassmann(cfg)?),
        Process::Poincare => Output::Matrices(processes::bm_poincare(cfg)?),
        Process::CartanHadamard => Output::Matrices(processes::bm_cartan_hadamard(cfg)?),
        Process::Wishart => Output::Matrices(processes::wishart(cfg)?),
        Process::BwBm => Output::Matrices(processes::bm_bures_wasserstein(cfg)?),
        Process::VerticalBm => {
            let m0 = match &cfg.initial {
                Some(m) => m.clone(),
                None => orbitflow::matcore::truncation(cfg.n, cfg.k),
            };
            let (total, image) = processes::vertical_bm(&m0, cfg)?;
            Output::Vertical(total, image)
        }
        Process::SphereVertical => {
            let x0 = run.init_vector.clone().unwrap_or_else(|| {
                let mut e = vec![0.0; cfg.n];
                e[0] = 1.0;
                e
            });
            Output::Sphere(processes::sphere_vertical_bm(&x0, cfg)?)
        }
        Process::EigenWishart | Process::EigenBw => {
            let kind = if run.process == Process::EigenWishart {
                EigenKind::Wishart
            } else {
                EigenKind::BuresWasserstein
            };
            let l0 = run.init_vector.clone().unwrap_or_else(|| default_eigenvalues(cfg.n));
            Output::Eigen(processes::eigen_sde(kind, &l0, cfg.k, cfg)?)
        }
    };

    let mut dir = OutputDir::create(&run.out)?;
    let w = index_width(cfg.paths);
    let mut status = String::from("path,completed,last_time\n");
    let mut notes = Vec::new();
    let series = match &output {
        Output::Matrices(paths) => {
            for (i, p) in paths.iter().enumerate() {
                dir.write(&format!("path_{i:0w$}.csv"), &csvio::path_csv(p))?;
                status.push_str(&status_row(i, &p.status, p.last_time(), &mut notes));
            }
            match run.process {
                Process::Poincare => {
                    let p = &paths[0];
                    let x: Vec<f64> = p.states.iter().map(|s| s[(0, 0)]).collect();
                    let y: Vec<f64> = p.states.iter().map(|s| s[(0, 1)]).collect();
                    vec![Series::new("x", &p.times, &x), Series::new("y", &p.times, &y)]
                }
                Process::Stiefel => trace_series(paths, "X_00"),
                _ => trace_series(paths, "tr"),
            }
        }
        Output::Vertical(total, image) => {
            for (i, (p, q)) in total.iter().zip(image).enumerate() {
                dir.write(&format!("path_{i:0w$}.csv"), &csvio::path_csv(p))?;
                dir.write(&format!("image_{i:0w$}.csv"), &csvio::path_csv(q))?;
                status.push_str(&status_row(i, &p.status, p.last_time(), &mut notes));
            }
            trace_series(image, "tr image")
        }
        Output::Sphere(paths) => {
            for (i, (p, s)) in paths.iter().enumerate() {
                dir.write(&format!("path_{i:0w$}.csv"), &csvio::path_csv(p))?;
                dir.write(&format!("s_{i:0w$}.csv"), &csvio::series_csv(&p.times, &[("S", s)]))?;
                status.push_str(&status_row(i, &p.status, p.last_time(), &mut notes));
            }
            let (p, s) = &paths[0];
            let s0 = s[0];
            let slope = cfg.n as f64 - 1.0;
            let line: Vec<f64> = p.times.iter().map(|t| s0 + slope * t).collect();
            vec![Series::new("S_t", &p.times, s), Series::new("(n-1)t + S_0", &p.times, &line)]
        }
        Output::Eigen(paths) => {
            for (i, p) in paths.iter().enumerate() {
                dir.write(&format!("path_{i:0w$}.csv"), &csvio::eigen_csv(p))?;
                status.push_str(&status_row(i, &p.status, *p.times.last().unwrap_or(&0.0), &mut notes));
            }
            let p = &paths[0];
            (0..p.values[0].len())
                .map(|j| {
                    let y: Vec<f64> = p.values.iter().map(|v| v[j]).collect();
                    Series::new(format!("l_{}", j + 1), &p.times, &y)
                })
                .collect()
        }
    };
    dir.write("status.csv", &status)?;
    dir.write("summary.svg", &line_chart(run.process.name(), "t", "value", &series))?;
    let stopped = notes.len();
    for n in notes {
        dir.note(n);
    }
    dir.finish("simulate", run.resolved.clone(), run.inputs.clone())?;
    println!(
        "{}: {} path(s) written to {}, {stopped} stopped early",
        run.process.name(),
        cfg.paths,
        run.out.display()
    );
    Ok(())
}
