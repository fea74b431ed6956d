//! Orchestration behind the command-line subcommands.
//!
//! Output layout of a run directory:
//!
//! ```text
//! <output>/quantum.csv          E(t) of the quantum engine
//! <output>/pseudoclassical.csv  E(t) of the map ensemble, same t-grid
//! ```
//!
//! A sweep directory holds one run directory per grid point under
//! `points/<hash>/`, a `status` file in each, and `results.csv` with one
//! [`FitReport`] row per point and engine.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analysis::{analyze, FitReport};
use crate::config::{Engine, RunConfig};
use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::pseudoclassical::{
    default_portrait_seeds, evolve_ensemble, phase_portrait, ClassicalEnsemble, Orbit,
    RescaledParams,
};
use crate::quantum::{
    ballistic_coefficient, evolve, KickStrength, PlanckSpec, Propagator, QuantumState,
};
use crate::series::{write_atomic, EnergySeries};

/// File name of the series written by `engine`.
pub fn series_file(engine: Engine) -> &'static str {
    match engine {
        Engine::Pseudoclassical => "pseudoclassical.csv",
        _ => "quantum.csv",
    }
}

/// Series produced by [`run`], with the paths they were written to.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub quantum: Option<EnergySeries>,
    pub pseudoclassical: Option<EnergySeries>,
    pub files: Vec<PathBuf>,
    /// Largest norm drift of the quantum state.
    pub max_norm_drift: Option<f64>,
}

/// Simulate without writing anything.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let potential = cfg.potential_spec()?;
    let planck = cfg.planck()?;
    let kick = cfg.kick_strength()?;
    let mut out = RunOutput {
        quantum: None,
        pseudoclassical: None,
        files: Vec::new(),
        max_norm_drift: None,
    };
    if cfg.engine.runs_quantum() {
        let initial = QuantumState::basis(0, cfg.half_size()?)?;
        let run = evolve(initial, &potential, kick, &planck, cfg.steps, &cfg.stride)?;
        let mut series = run.series;
        series.meta = cfg.to_metadata(Engine::Quantum)?;
        out.quantum = Some(series);
        out.max_norm_drift = Some(run.max_norm_drift);
    }
    if cfg.engine.runs_pseudoclassical() {
        let params = RescaledParams::new(kick, &planck)?;
        let mut ensemble = ClassicalEnsemble::on_axis(cfg.ensemble, cfg.sampling, cfg.seed)?;
        let run = evolve_ensemble(&mut ensemble, &potential, &params, cfg.steps, &cfg.stride)?;
        let mut series = run.series;
        series.meta = cfg.to_metadata(Engine::Pseudoclassical)?;
        out.pseudoclassical = Some(series);
    }
    Ok(out)
}

/// Simulate and write the series into `cfg.output`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = simulate(cfg)?;
    for (engine, series) in [
        (Engine::Quantum, &out.quantum),
        (Engine::Pseudoclassical, &out.pseudoclassical),
    ] {
        if let Some(series) = series {
            let path = cfg.output.join(series_file(engine));
            series.write_csv(&path)?;
            out.files.push(path);
        }
    }
    Ok(out)
}

/// Fit a series and, for quantum series, add `D` from the operator column.
pub fn fit_series(series: &EnergySeries) -> Result<FitReport> {
    let mut report = analyze(series)?;
    if series.meta.get("engine") == Some("quantum") {
        if let Ok(cfg) = RunConfig::from_metadata(&series.meta) {
            report.d_column = ballistic_coefficient(
                &cfg.potential_spec()?,
                cfg.kick_strength()?,
                &cfg.planck()?,
                cfg.half_size()?,
            )
            .ok();
        }
    }
    Ok(report)
}

/// Analysis of an existing series file.
pub fn fit(path: &Path) -> Result<FitReport> {
    fit_series(&EnergySeries::read_csv(path)?)
}

/// Values to sweep; empty lists keep the base configuration's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepGrid {
    pub tilde: Vec<f64>,
    pub kick: Vec<f64>,
    pub potential: Vec<String>,
}

impl SweepGrid {
    /// The cartesian product over `base`, potentials outermost.
    pub fn points(&self, base: &RunConfig) -> Vec<RunConfig> {
        let pots = if self.potential.is_empty() {
            vec![base.potential.clone()]
        } else {
            self.potential.clone()
        };
        let kicks = if self.kick.is_empty() {
            vec![base.kick]
        } else {
            self.kick.clone()
        };
        let tildes = if self.tilde.is_empty() {
            vec![base.tilde]
        } else {
            self.tilde.clone()
        };
        let mut out = Vec::new();
        for p in &pots {
            for &k in &kicks {
                for &h in &tildes {
                    let mut cfg = base.clone();
                    cfg.potential = p.clone();
                    cfg.kick = k;
                    cfg.tilde = h;
                    out.push(cfg);
                }
            }
        }
        out
    }
}

/// Hash of everything that determines a run's output.
pub fn content_hash(cfg: &RunConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.output = PathBuf::new();
    let digest = Sha256::digest(canonical.to_text().as_bytes());
    digest.iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Done,
    /// Already complete from an earlier invocation.
    Skipped,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub hash: String,
    pub config: RunConfig,
    pub status: PointStatus,
    pub reports: Vec<FitReport>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub results: PathBuf,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.points
            .iter()
            .filter(|p| matches!(p.status, PointStatus::Failed(_)))
            .count()
    }
}

const STATUS_FILE: &str = "status";
const REPORTS_FILE: &str = "reports.csv";

fn run_point(cfg: &RunConfig) -> Result<Vec<FitReport>> {
    let out = run(cfg)?;
    let mut reports = Vec::new();
    for series in [&out.quantum, &out.pseudoclassical].into_iter().flatten() {
        reports.push(fit_series(series)?);
    }
    let mut text = FitReport::csv_header() + "\n";
    for r in &reports {
        text.push_str(&r.to_csv_row());
        text.push('\n');
    }
    write_atomic(&cfg.output.join(REPORTS_FILE), text.as_bytes())?;
    Ok(reports)
}

fn read_reports(path: &Path) -> Result<Vec<FitReport>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| FitReport::from_csv_row(header, l))
        .collect()
}

/// Run every grid point in a pool of `jobs` workers and collect the fits.
///
/// Points whose `status` already reads `ok` are not recomputed.
pub fn sweep(
    base: &RunConfig,
    grid: &SweepGrid,
    output: &Path,
    jobs: usize,
) -> Result<SweepOutcome> {
    let points = grid.points(base);
    if points.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut prepared = Vec::with_capacity(points.len());
    for mut cfg in points {
        cfg.validate()?;
        let hash = content_hash(&cfg);
        cfg.output = output.join("points").join(&hash);
        prepared.push((hash, cfg));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<SweepPoint> = pool.install(|| {
        prepared
            .into_par_iter()
            .map(|(hash, cfg)| {
                let status_path = cfg.output.join(STATUS_FILE);
                let done = fs::read_to_string(&status_path).is_ok_and(|s| s.trim() == "ok");
                if done {
                    if let Ok(reports) = read_reports(&cfg.output.join(REPORTS_FILE)) {
                        return SweepPoint {
                            hash,
                            config: cfg,
                            status: PointStatus::Skipped,
                            reports,
                        };
                    }
                }
                let (status, reports) = match run_point(&cfg) {
                    Ok(r) => (PointStatus::Done, r),
                    Err(e) => (PointStatus::Failed(e.to_string()), Vec::new()),
                };
                let text = match &status {
                    PointStatus::Failed(msg) => format!("failed: {msg}\n"),
                    _ => "ok\n".to_string(),
                };
                let status = match write_atomic(&status_path, text.as_bytes()) {
                    Ok(()) => status,
                    Err(e) => PointStatus::Failed(format!("cannot write status: {e}")),
                };
                SweepPoint {
                    hash,
                    config: cfg,
                    status,
                    reports,
                }
            })
            .collect()
    });
    let mut text = format!("hash,status,{}\n", FitReport::csv_header());
    for p in &results {
        let status = match &p.status {
            PointStatus::Failed(_) => "failed",
            _ => "ok",
        };
        if p.reports.is_empty() {
            let mut meta = crate::series::Metadata::new();
            meta.set("engine", p.config.engine);
            meta.set("potential", &p.config.potential);
            meta.set("K", p.config.kick);
            meta.set("M", p.config.m);
            meta.set("N", p.config.n);
            meta.set("tilde", p.config.tilde);
            let empty = FitReport {
                meta,
                ..Default::default()
            };
            let _ = writeln!(text, "{},{status},{}", p.hash, empty.to_csv_row());
        }
        for r in &p.reports {
            let _ = writeln!(text, "{},{status},{}", p.hash, r.to_csv_row());
        }
    }
    let results_path = output.join("results.csv");
    write_atomic(&results_path, text.as_bytes())?;
    Ok(SweepOutcome {
        points: results,
        results: results_path,
    })
}

/// Read the fit rows of a sweep `results.csv`, skipping failed points.
pub fn read_sweep_results(path: &Path) -> Result<Vec<FitReport>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let header = header.splitn(3, ',').nth(2).unwrap_or_default().to_string();
    let mut out = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut parts = line.splitn(3, ',');
        let (_hash, status, row) = (parts.next(), parts.next(), parts.next().unwrap_or_default());
        if status == Some("ok") {
            out.push(FitReport::from_csv_row(&header, row)?);
        }
    }
    Ok(out)
}

/// Orbits of the map under `cfg`; an empty seed list uses the default set.
pub fn portrait(cfg: &RunConfig, seeds: &[(f64, f64)]) -> Result<Vec<Orbit>> {
    let planck = cfg.planck()?;
    let params = RescaledParams::new(cfg.kick_strength()?, &planck)?;
    let potential = cfg.potential_spec()?;
    let defaults;
    let seeds = if seeds.is_empty() {
        defaults = default_portrait_seeds();
        &defaults
    } else {
        seeds
    };
    Ok(phase_portrait(&potential, &params, seeds, cfg.steps))
}

/// Portrait CSV: metadata lines, then `seed_id,t,theta,p` rows.
pub fn portrait_csv(cfg: &RunConfig, orbits: &[Orbit]) -> Result<String> {
    let mut out = String::new();
    let mut meta = cfg.to_metadata(Engine::Pseudoclassical)?;
    meta.set("engine", "portrait");
    for (k, v) in meta.iter() {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("seed_id,t,theta,p\n");
    for o in orbits {
        for q in &o.points {
            let _ = writeln!(out, "{},{},{:e},{:e}", o.seed_id, q.t, q.theta, q.momentum);
        }
    }
    Ok(out)
}

pub fn write_portrait(cfg: &RunConfig, orbits: &[Orbit], path: &Path) -> Result<()> {
    write_atomic(path, portrait_csv(cfg, orbits)?.as_bytes())
}

/// Parse seeds written as `theta:p; theta:p; ...`.
pub fn parse_seeds(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("seed `{item}` is not theta:p")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad seed angle `{a}`")))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad seed momentum `{b}`")))?;
            Ok((a, b))
        })
        .collect()
}

/// Threshold below which `‖Uψ − ψ‖` counts as the identity.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Result of [`check_antiresonance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiresonanceReport {
    pub trials: usize,
    pub max_distance: f64,
    pub min_distance: f64,
}

impl AntiresonanceReport {
    pub fn is_identity(&self) -> bool {
        self.max_distance < IDENTITY_TOL
    }
}

/// Apply the `h̃ = 0`, `ħ = 2π` operator to `trials` random states.
pub fn check_antiresonance(
    potential: &PotentialSpec,
    kick: KickStrength,
    half_size: usize,
    trials: usize,
    seed: u64,
) -> Result<AntiresonanceReport> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial state".into()));
    }
    let planck = PlanckSpec::main_resonance(0.0)?;
    let mut prop = Propagator::new(potential, kick, &planck, half_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_distance: f64 = 0.0;
    let mut min_distance = f64::INFINITY;
    for _ in 0..trials {
        let psi = QuantumState::random(half_size, half_size as i64 / 2, &mut rng)?;
        let mut phi = psi.clone();
        prop.apply(&mut phi);
        let d = phi.distance(&psi);
        max_distance = max_distance.max(d);
        min_distance = min_distance.min(d);
    }
    Ok(AntiresonanceReport {
        trials,
        max_distance,
        min_distance,
    })
}
