//! Run configuration: a `key = value` text file plus overrides.
//!
//! ```text
//! # Fig. 2(a)-style run
//! engine = both
//! potential = va
//! K = 5
//! M = 1
//! N = 1
//! tilde = 1e-3
//! steps = 24000
//! stride = log
//! ensemble = 10000
//! sampling = stratified
//! seed = 0
//! output = out/va
//! ```
//!
//! Every key may be omitted; defaults are listed in [`RunConfig::default`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::potentials::{format_vertices, parse_vertices, PotentialSpec};
use crate::pseudoclassical::{RescaledParams, Sampling, DEFAULT_ENSEMBLE};
use crate::quantum::{recommended_half_size, KickStrength, PlanckSpec};
use crate::series::{Metadata, RecordSchedule};

/// Which dynamics to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Quantum,
    Pseudoclassical,
    /// Both engines on the same record schedule.
    Both,
}

impl Engine {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quantum" => Ok(Engine::Quantum),
            "pseudoclassical" | "classical" => Ok(Engine::Pseudoclassical),
            "both" => Ok(Engine::Both),
            other => Err(Error::Config(format!(
                "engine must be quantum, pseudoclassical or both, got `{other}`"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Quantum => "quantum",
            Engine::Pseudoclassical => "pseudoclassical",
            Engine::Both => "both",
        }
    }

    pub fn runs_quantum(&self) -> bool {
        matches!(self, Engine::Quantum | Engine::Both)
    }

    pub fn runs_pseudoclassical(&self) -> bool {
        matches!(self, Engine::Pseudoclassical | Engine::Both)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub engine: Engine,
    /// `va`, `vb`, `vc`, `vd`, `cos:m` or `custom`.
    pub potential: String,
    /// Shoulder height for `vb`/`vc`.
    pub g: Option<f64>,
    /// Vertex list for `custom`, as accepted by [`parse_vertices`].
    pub vertices: Option<String>,
    pub kick: f64,
    pub m: u32,
    pub n: u32,
    pub tilde: f64,
    pub steps: u64,
    pub stride: RecordSchedule,
    pub ensemble: usize,
    pub sampling: Sampling,
    /// Half grid size `J`; chosen from `h̃` and `steps` when absent.
    pub grid: Option<usize>,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            engine: Engine::Quantum,
            potential: "va".into(),
            g: None,
            vertices: None,
            kick: KickStrength::DEFAULT.value(),
            m: 1,
            n: 1,
            tilde: 1e-3,
            steps: 1000,
            stride: RecordSchedule::default(),
            ensemble: DEFAULT_ENSEMBLE,
            sampling: Sampling::Uniform,
            grid: None,
            seed: 0,
            output: PathBuf::from("out"),
        }
    }
}

/// Keys accepted in configuration files and as overrides.
pub const KEYS: [&str; 15] = [
    "engine",
    "potential",
    "g",
    "vertices",
    "K",
    "M",
    "N",
    "tilde",
    "steps",
    "stride",
    "ensemble",
    "sampling",
    "grid",
    "seed",
    "output",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` has invalid value `{value}`")))
}

impl RunConfig {
    /// Parse a configuration file's text. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Set one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let empty = value.trim().is_empty();
        match key {
            "engine" => self.engine = Engine::parse(value)?,
            "potential" => self.potential = value.trim().to_ascii_lowercase(),
            "g" => {
                self.g = if empty {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "vertices" => {
                self.vertices = if empty {
                    None
                } else {
                    Some(value.trim().to_string())
                }
            }
            "K" | "k" => self.kick = parse_num(key, value)?,
            "M" | "m" => self.m = parse_num(key, value)?,
            "N" | "n" => self.n = parse_num(key, value)?,
            "tilde" => self.tilde = parse_num(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "stride" => self.stride = RecordSchedule::parse(value)?,
            "ensemble" => self.ensemble = parse_num(key, value)?,
            "sampling" => self.sampling = Sampling::parse(value)?,
            "grid" | "J" => {
                self.grid = if empty || value.trim() == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "output" => self.output = PathBuf::from(value.trim()),
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}` (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Apply `key=value` overrides in order.
    pub fn apply_overrides<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<()> {
        for (k, v) in overrides {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        if self.potential == "custom" {
            let text = self.vertices.as_deref().ok_or_else(|| {
                Error::Config("potential = custom needs a `vertices` list".into())
            })?;
            if self.g.is_some() {
                return Err(Error::Config(
                    "`g` does not apply to custom potentials".into(),
                ));
            }
            return PotentialSpec::piecewise_linear(&parse_vertices(text)?);
        }
        if self.vertices.is_some() {
            return Err(Error::Config(format!(
                "`vertices` only applies to potential = custom, not `{}`",
                self.potential
            )));
        }
        PotentialSpec::from_name(&self.potential, self.g)
    }

    pub fn planck(&self) -> Result<PlanckSpec> {
        PlanckSpec::new(self.m, self.n, self.tilde)
    }

    pub fn kick_strength(&self) -> Result<KickStrength> {
        KickStrength::new(self.kick)
    }

    /// Half grid size used by the quantum engine.
    pub fn half_size(&self) -> Result<usize> {
        match self.grid {
            Some(j) => Ok(j),
            None => Ok(recommended_half_size(
                &self.planck()?,
                &self.potential_spec()?,
                self.steps,
            )),
        }
    }

    /// Check every invariant without running anything.
    pub fn validate(&self) -> Result<()> {
        let planck = self.planck()?;
        let kick = self.kick_strength()?;
        self.potential_spec()?;
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if let Some(j) = self.grid {
            if j < 2 || !j.is_power_of_two() {
                return Err(Error::Config(format!(
                    "grid must be a power of two ≥ 2, got {j}"
                )));
            }
        }
        if self.engine.runs_pseudoclassical() {
            if self.ensemble == 0 {
                return Err(Error::Config("ensemble must be positive".into()));
            }
            if self.tilde == 0.0 {
                return Err(Error::Config(
                    "the pseudoclassical engine needs h̃ ≠ 0".into(),
                ));
            }
            RescaledParams::new(kick, &planck).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Metadata header written with a series from `engine`.
    pub fn to_metadata(&self, engine: Engine) -> Result<Metadata> {
        let mut meta = Metadata::new();
        meta.set("engine", engine);
        meta.set("potential", &self.potential);
        if let Some(g) = self.g {
            meta.set("g", g);
        }
        if let Some(v) = &self.vertices {
            meta.set("vertices", format_vertices(&parse_vertices(v)?));
        }
        meta.set("K", self.kick);
        meta.set("M", self.m);
        meta.set("N", self.n);
        meta.set("tilde", self.tilde);
        meta.set("steps", self.steps);
        meta.set("stride", self.stride);
        match engine {
            Engine::Pseudoclassical => {
                meta.set("ensemble", self.ensemble);
                meta.set("sampling", self.sampling.as_str());
                meta.set("seed", self.seed);
            }
            _ => meta.set("grid", self.half_size()?),
        }
        Ok(meta)
    }

    /// Rebuild the configuration that produced a series from its metadata.
    pub fn from_metadata(meta: &Metadata) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (k, v) in meta.iter() {
            if KEYS.contains(&k) {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    /// Text form accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("engine = {}", self.engine),
            format!("potential = {}", self.potential),
        ];
        if let Some(g) = self.g {
            lines.push(format!("g = {g}"));
        }
        if let Some(v) = &self.vertices {
            lines.push(format!("vertices = {v}"));
        }
        lines.extend([
            format!("K = {}", self.kick),
            format!("M = {}", self.m),
            format!("N = {}", self.n),
            format!("tilde = {}", self.tilde),
            format!("steps = {}", self.steps),
            format!("stride = {}", self.stride),
            format!("ensemble = {}", self.ensemble),
            format!("sampling = {}", self.sampling.as_str()),
            format!(
                "grid = {}",
                self.grid.map_or("auto".to_string(), |j| j.to_string())
            ),
            format!("seed = {}", self.seed),
            format!("output = {}", self.output.display()),
        ]);
        lines.join("\n") + "\n"
    }
}
