//! The pseudoclassical limit of the rotor at `ħ = 2π + h̃`.
//!
//! With `p̃ = p h̃/ħ` and `K̃ = K h̃/ħ`, the `h̃ → 0` limit of one period is
//! the area-preserving map
//!
//! ```text
//! ρ      = p̃ + K̃ f(θ̃)
//! o      = θ̃ + ρ + π
//! p̃'     = ρ + K̃ f(o)
//! θ̃'     = o - p̃' + π
//! ```
//!
//! with angles wrapped into `[-π, π)` after every update and momentum kept
//! unwrapped. Energies are reported in quantum units, `E = ⟨p̃²/2⟩ ħ²/h̃²`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potentials::{wrap_angle, PotentialSpec};
use crate::quantum::{KickStrength, PlanckSpec};
use crate::series::{EnergySeries, Metadata, RecordSchedule};

/// Default ensemble size.
pub const DEFAULT_ENSEMBLE: usize = 10_000;

/// Points per parallel work unit. Fixed so reductions are reproducible.
const CHUNK: usize = 1024;

/// Parameters of the rescaled map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledParams {
    k_tilde: f64,
    hbar: f64,
    tilde: f64,
}

impl RescaledParams {
    /// `K̃ = K h̃/ħ`. The map describes the `ħ ≈ 2π` resonance only.
    pub fn new(kick: KickStrength, planck: &PlanckSpec) -> Result<Self> {
        if planck.m() != 1 || planck.n() != 1 {
            return Err(Error::Domain(format!(
                "the pseudoclassical map is defined near ħ = 2π (M = N = 1), got M = {}, N = {}",
                planck.m(),
                planck.n()
            )));
        }
        let hbar = planck.hbar();
        Ok(RescaledParams {
            k_tilde: kick.value() * planck.tilde() / hbar,
            hbar,
            tilde: planck.tilde(),
        })
    }

    /// Parameters with an explicit `K̃`, e.g. `K̃ = 0` for free motion.
    pub fn from_k_tilde(k_tilde: f64, hbar: f64, tilde: f64) -> Result<Self> {
        if !(k_tilde.is_finite() && hbar.is_finite() && hbar > 0.0 && tilde.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid rescaled parameters K̃ = {k_tilde}, ħ = {hbar}, h̃ = {tilde}"
            )));
        }
        Ok(RescaledParams {
            k_tilde,
            hbar,
            tilde,
        })
    }

    pub fn k_tilde(&self) -> f64 {
        self.k_tilde
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn tilde(&self) -> f64 {
        self.tilde
    }

    /// `Δ = 2K̃/π`: per-step drift of `V_A` phase points along the axis.
    pub fn delta(&self) -> f64 {
        2.0 * self.k_tilde / PI
    }

    /// `ħ²/h̃²`, converting `⟨p̃²/2⟩` into quantum energy units.
    pub fn energy_scale(&self) -> Result<f64> {
        if self.tilde == 0.0 {
            return Err(Error::Domain(
                "energy rescaling ħ²/h̃² is undefined at h̃ = 0".into(),
            ));
        }
        Ok(self.hbar * self.hbar / (self.tilde * self.tilde))
    }

    /// Momentum tolerance below which a point counts as on the θ̃ axis.
    pub fn axis_tolerance(&self) -> f64 {
        1e-12 * self.k_tilde.abs().max(1.0)
    }
}

/// One application of the map.
#[inline]
pub fn map_step(
    point: (f64, f64),
    potential: &PotentialSpec,
    params: &RescaledParams,
) -> (f64, f64) {
    let (theta, p) = point;
    let k = params.k_tilde;
    let rho = p + k * potential.force(theta);
    let o = wrap_angle(theta + rho + PI);
    let p_next = rho + k * potential.force(o);
    let theta_next = wrap_angle(o - p_next + PI);
    (theta_next, p_next)
}

/// How initial angles are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// i.i.d. uniform on `[-π, π)`.
    #[default]
    Uniform,
    /// Cell midpoints `-π + 2π(i + ½)/n`.
    Stratified,
}

impl Sampling {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Sampling::Uniform),
            "stratified" => Ok(Sampling::Stratified),
            other => Err(Error::Config(format!(
                "sampling must be `uniform` or `stratified`, got `{other}`"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Sampling::Uniform => "uniform",
            Sampling::Stratified => "stratified",
        }
    }
}

/// Phase points `(θ̃, p̃)` evolving under the map, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    theta: Vec<f64>,
    momentum: Vec<f64>,
    seed: Option<u64>,
}

impl ClassicalEnsemble {
    /// `p̃₀ = 0` and `θ̃₀` uniform, matching the initial state `|0⟩`.
    pub fn on_axis(size: usize, sampling: Sampling, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("ensemble size must be positive".into()));
        }
        let theta = match sampling {
            Sampling::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..size)
                    .map(|_| wrap_angle(-PI + TAU * rng.gen::<f64>()))
                    .collect()
            }
            Sampling::Stratified => (0..size)
                .map(|i| -PI + TAU * (i as f64 + 0.5) / size as f64)
                .collect(),
        };
        Ok(ClassicalEnsemble {
            theta,
            momentum: vec![0.0; size],
            seed: (sampling == Sampling::Uniform).then_some(seed),
        })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Self {
        ClassicalEnsemble {
            theta: points.iter().map(|p| wrap_angle(p.0)).collect(),
            momentum: points.iter().map(|p| p.1).collect(),
            seed: None,
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.theta[i], self.momentum[i])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta
            .iter()
            .copied()
            .zip(self.momentum.iter().copied())
    }

    /// Advance every point by one map step.
    pub fn step(&mut self, potential: &PotentialSpec, params: &RescaledParams) {
        self.theta
            .par_chunks_mut(CHUNK)
            .zip(self.momentum.par_chunks_mut(CHUNK))
            .for_each(|(th, mo)| {
                for (t, p) in th.iter_mut().zip(mo.iter_mut()) {
                    (*t, *p) = map_step((*t, *p), potential, params);
                }
            });
    }

    /// Mean and sample variance of `p̃²/2`, and the fraction off the axis.
    pub fn moments(&self, axis_tol: f64) -> EnsembleMoments {
        let partials: Vec<(f64, f64, usize)> = self
            .momentum
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk.iter().fold((0.0, 0.0, 0usize), |(s, s2, off), &p| {
                    let e = 0.5 * p * p;
                    (s + e, s2 + e * e, off + usize::from(p.abs() > axis_tol))
                })
            })
            .collect();
        let (sum, sum_sq, off) = partials
            .into_iter()
            .fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let n = self.len() as f64;
        let mean = sum / n;
        let variance = if self.len() > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        EnsembleMoments {
            mean_energy: mean,
            variance,
            off_axis_fraction: off as f64 / n,
        }
    }
}

/// Ensemble statistics in tilde units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleMoments {
    /// `⟨p̃²/2⟩`.
    pub mean_energy: f64,
    /// Sample variance of `p̃²/2`.
    pub variance: f64,
    /// `P_{p̃≠0}`.
    pub off_axis_fraction: f64,
}

/// Output of [`evolve_ensemble`]; the extra columns line up with the series.
#[derive(Debug, Clone)]
pub struct EnsembleEvolution {
    /// Rescaled energy `⟨p̃²/2⟩ ħ²/h̃²`.
    pub series: EnergySeries,
    /// Monte-Carlo standard error of each recorded energy, same units.
    pub standard_errors: Vec<f64>,
    /// Fraction of points that have left the θ̃ axis.
    pub off_axis: Vec<f64>,
}

/// Iterate the map over the ensemble, recording the rescaled energy.
pub fn evolve_ensemble(
    ensemble: &mut ClassicalEnsemble,
    potential: &PotentialSpec,
    params: &RescaledParams,
    steps: u64,
    schedule: &RecordSchedule,
) -> Result<EnsembleEvolution> {
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let scale = params.energy_scale()?;
    let mut meta = Metadata::new();
    meta.set("engine", "pseudoclassical");
    meta.set("potential", potential.name());
    meta.set("tilde", params.tilde);
    meta.set("ensemble", ensemble.len());
    let mut out = EnsembleEvolution {
        series: EnergySeries::new(meta),
        standard_errors: Vec::new(),
        off_axis: Vec::new(),
    };
    let tol = params.axis_tolerance();
    let n = ensemble.len() as f64;
    let times = schedule.times(steps);
    let mut next = times.iter().copied().peekable();
    for t in 1..=steps {
        ensemble.step(potential, params);
        if next.peek() == Some(&t) {
            next.next();
            let m = ensemble.moments(tol);
            out.series.push(t, m.mean_energy * scale)?;
            out.standard_errors.push((m.variance / n).sqrt() * scale);
            out.off_axis.push(m.off_axis_fraction);
        }
    }
    Ok(out)
}

/// Exact `V_A` ensemble energy `Ẽ(t) = Δ³/(3π) t(t+1)(2t+1)` for `t < π/Δ`.
pub fn cubic_oracle(t: u64, params: &RescaledParams) -> Result<f64> {
    let delta = params.delta();
    let horizon = PI / delta;
    if !(delta > 0.0) || t as f64 >= horizon {
        return Err(Error::Domain(format!(
            "cubic law holds only for t < π/Δ = {horizon:.1}, got t = {t}"
        )));
    }
    let t = t as f64;
    Ok(delta.powi(3) / (3.0 * PI) * t * (t + 1.0) * (2.0 * t + 1.0))
}

/// Predicted saturation scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationEstimate {
    /// `t_s = π²ħ/(2K h̃)`.
    pub t_s: f64,
    /// `E_s = (2π)²/2 · ħ²/h̃²`.
    pub e_s: f64,
}

pub fn saturation_estimates(
    params: &RescaledParams,
    kick: KickStrength,
) -> Result<SaturationEstimate> {
    let tilde = params.tilde;
    if tilde == 0.0 {
        return Err(Error::Domain("saturation scales diverge at h̃ = 0".into()));
    }
    Ok(SaturationEstimate {
        t_s: PI * PI * params.hbar / (2.0 * kick.value() * tilde.abs()),
        e_s: 0.5 * TAU * TAU * params.energy_scale()?,
    })
}

/// A point on an orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPoint {
    pub t: u64,
    pub theta: f64,
    pub momentum: f64,
}

impl OrbitPoint {
    /// Momentum folded into `[0, 2π)` for display.
    pub fn display_momentum(&self) -> f64 {
        self.momentum.rem_euclid(TAU)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub seed_id: usize,
    /// Includes the seed itself at `t = 0`.
    pub points: Vec<OrbitPoint>,
}

/// Orbits of the given seeds, one point per step.
pub fn phase_portrait(
    potential: &PotentialSpec,
    params: &RescaledParams,
    seeds: &[(f64, f64)],
    steps: u64,
) -> Vec<Orbit> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(seed_id, &(theta, p))| {
            let mut point = (wrap_angle(theta), p);
            let mut points = Vec::with_capacity(steps as usize + 1);
            points.push(OrbitPoint {
                t: 0,
                theta: point.0,
                momentum: point.1,
            });
            for t in 1..=steps {
                point = map_step(point, potential, params);
                points.push(OrbitPoint {
                    t,
                    theta: point.0,
                    momentum: point.1,
                });
            }
            Orbit { seed_id, points }
        })
        .collect()
}

/// Seeds covering the θ̃ axis and a spread of generic points.
pub fn default_portrait_seeds() -> Vec<(f64, f64)> {
    let mut seeds: Vec<(f64, f64)> = (1..8)
        .flat_map(|k| {
            let theta = PI * k as f64 / 8.0;
            [(-theta, 0.0), (theta, 0.0)]
        })
        .collect();
    for theta in [-2.5, -1.0, 0.5, 2.0] {
        for p in [0.5 * PI, PI, 1.5 * PI] {
            seeds.push((theta, p));
        }
    }
    seeds
}

/// Fraction of on-axis samples (`p̃ = 0`) still on the axis after one step.
pub fn axis_persistence(
    potential: &PotentialSpec,
    params: &RescaledParams,
    samples: &[f64],
) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let tol = params.axis_tolerance();
    let stay = samples
        .iter()
        .filter(|&&theta| map_step((theta, 0.0), potential, params).1.abs() <= tol)
        .count();
    stay as f64 / samples.len() as f64
}
