//! Exact evolution of the resonant double kicked rotor.
//!
//! One period applies
//!
//! ```text
//! U = exp(+i p²/2ħ) · exp(-i K V(θ)/ħ) · exp(-i p²/2ħ) · exp(-i K V(θ)/ħ)
//! ```
//!
//! read right to left, on a momentum grid `j ∈ [-J, J)` with `p = jħ`. Kicks
//! are pointwise in the angle representation on `θ_n = -π + 2πn/(2J)`;
//! free factors are pointwise in momentum. FFTs move between the two.
//!
//! With `ħ = 2πM/N + h̃`, the free phase `j²ħ/2` is split into the rational
//! part `πM j²/N`, reduced with integer arithmetic, and the detuning part
//! `j² h̃/2`. The rational phase is then exact at any `j`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::potentials::{wrap_angle, PotentialSpec};
use crate::series::{EnergySeries, Metadata, RecordSchedule};

/// Probability allowed in `|j| > 0.9 J` before the aliasing guard trips.
pub const TAIL_LIMIT: f64 = 1e-8;

/// Fraction of the half grid beyond which probability counts as tail.
pub const TAIL_FRACTION: f64 = 0.9;

/// Grid used when there is no detuning to size from.
pub const RESONANT_HALF_SIZE: usize = 1 << 12;

const MIN_HALF_SIZE: usize = 256;

/// Effective Planck constant `ħ = 2πM/N + h̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanckSpec {
    m: u32,
    n: u32,
    tilde: f64,
}

impl PlanckSpec {
    /// `M` and `N` must be odd, coprime, with `2N > M`.
    pub fn new(m: u32, n: u32, tilde: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidPlanck(format!(
                "M and N must be positive (got M = {m}, N = {n})"
            )));
        }
        if m.is_multiple_of(2) || n.is_multiple_of(2) {
            return Err(Error::InvalidPlanck(format!(
                "M and N must be odd (got M = {m}, N = {n})"
            )));
        }
        if gcd(m, n) != 1 {
            return Err(Error::InvalidPlanck(format!(
                "M and N must be coprime (got M = {m}, N = {n})"
            )));
        }
        if 2 * n <= m {
            return Err(Error::InvalidPlanck(format!(
                "resonance requires 2N > M (got M = {m}, N = {n})"
            )));
        }
        if !tilde.is_finite() {
            return Err(Error::InvalidPlanck(format!(
                "detuning h̃ = {tilde} is not finite"
            )));
        }
        Ok(PlanckSpec { m, n, tilde })
    }

    /// `ħ = 2π + h̃`.
    pub fn main_resonance(tilde: f64) -> Result<Self> {
        Self::new(1, 1, tilde)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn tilde(&self) -> f64 {
        self.tilde
    }

    pub fn hbar(&self) -> f64 {
        TAU * self.m as f64 / self.n as f64 + self.tilde
    }

    /// Half grid size `J` from the saturation momentum `2π/|h̃|` with a 2×
    /// margin, rounded up to a power of two.
    pub fn default_half_size(&self) -> usize {
        if self.tilde == 0.0 {
            return RESONANT_HALF_SIZE;
        }
        let j_max = 2.0 * TAU / self.tilde.abs();
        (j_max.ceil() as usize)
            .next_power_of_two()
            .max(MIN_HALF_SIZE)
    }
}

/// Empirical leak rate of a kinked potential: the outer-band probability of
/// `|0⟩` grows like `KINK_LEAK · t/J³`.
const KINK_LEAK: f64 = 1.5;

/// Half grid size for a run of `steps` periods: [`PlanckSpec::default_half_size`],
/// enlarged for non-analytic potentials so the `1/m²` Fourier tails of a kink
/// stay below the aliasing guard.
pub fn recommended_half_size(planck: &PlanckSpec, potential: &PotentialSpec, steps: u64) -> usize {
    let base = planck.default_half_size();
    if potential.is_analytic() {
        return base;
    }
    let kink = (KINK_LEAK * steps as f64 / TAIL_LIMIT).cbrt().ceil() as usize;
    base.max(kink.next_power_of_two())
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Kick amplitude `K > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct KickStrength(f64);

impl KickStrength {
    pub const DEFAULT: KickStrength = KickStrength(5.0);

    pub fn new(k: f64) -> Result<Self> {
        if k > 0.0 && k.is_finite() {
            Ok(KickStrength(k))
        } else {
            Err(Error::InvalidKick(k))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for KickStrength {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for KickStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `exp(∓ i j² ħ/2)` for `sign = ±1`.
pub fn free_phase(j: i64, sign: i32, planck: &PlanckSpec) -> Complex64 {
    let two_n = 2 * planck.n as u128;
    let jj = (j.unsigned_abs() as u128) * (j.unsigned_abs() as u128);
    let r = ((planck.m as u128 * (jj % two_n)) % two_n) as u32;
    let rational = if r == 0 {
        Complex64::new(1.0, 0.0)
    } else if r == planck.n {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, -PI * r as f64 / planck.n as f64)
    };
    let detuning = if planck.tilde == 0.0 || j == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        let angle = (jj as f64 * planck.tilde * 0.5).rem_euclid(TAU);
        Complex64::from_polar(1.0, -angle)
    };
    let phase = rational * detuning;
    if sign >= 0 {
        phase
    } else {
        phase.conj()
    }
}

/// A wavefunction over momentum indices `j ∈ [-J, J)`.
///
/// Amplitudes are stored in FFT order: slot `k` holds `j = k` for `k < J` and
/// `j = k - 2J` otherwise.
#[derive(Clone, PartialEq)]
pub struct QuantumState {
    amps: Vec<Complex64>,
    half_size: usize,
}

impl fmt::Debug for QuantumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumState")
            .field("half_size", &self.half_size)
            .field("norm_sqr", &self.norm_sqr())
            .finish()
    }
}

impl QuantumState {
    /// The momentum eigenstate `|k⟩`.
    pub fn basis(k: i64, half_size: usize) -> Result<Self> {
        check_half_size(half_size)?;
        if k < -(half_size as i64) || k >= half_size as i64 {
            return Err(Error::InvalidState(format!(
                "basis index {k} outside [-{half_size}, {half_size})"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * half_size];
        amps[slot(k, half_size)] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { amps, half_size })
    }

    /// Build from a function of `j`, normalized to unit norm.
    pub fn from_fn(half_size: usize, f: impl Fn(i64) -> Complex64) -> Result<Self> {
        check_half_size(half_size)?;
        let n = 2 * half_size;
        let amps: Vec<Complex64> = (0..n).map(|k| f(index_to_j(k, half_size))).collect();
        let mut state = QuantumState { amps, half_size };
        let norm = state.norm_sqr().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState(
                "amplitudes have zero or non-finite norm".into(),
            ));
        }
        state.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    /// Normalized random state, amplitudes uniform in `[-1, 1)²` on `|j| ≤ support`.
    pub fn random<R: Rng + ?Sized>(half_size: usize, support: i64, rng: &mut R) -> Result<Self> {
        check_half_size(half_size)?;
        let n = 2 * half_size;
        let mut amps = vec![Complex64::new(0.0, 0.0); n];
        // fill in j order so the draw sequence does not depend on the layout
        for j in -support..=support {
            if j < -(half_size as i64) || j >= half_size as i64 {
                continue;
            }
            let re = rng.gen_range(-1.0..1.0);
            let im = rng.gen_range(-1.0..1.0);
            amps[slot(j, half_size)] = Complex64::new(re, im);
        }
        let mut state = QuantumState { amps, half_size };
        let norm = state.norm_sqr().sqrt();
        state.amps.iter_mut().for_each(|a| *a /= norm);
        Ok(state)
    }

    pub fn half_size(&self) -> usize {
        self.half_size
    }

    pub fn amplitude(&self, j: i64) -> Complex64 {
        if j < -(self.half_size as i64) || j >= self.half_size as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.amps[slot(j, self.half_size)]
        }
    }

    /// `(j, ψ_j)` in increasing `j`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let j0 = self.half_size;
        (0..2 * j0).map(move |i| {
            let j = i as i64 - j0 as i64;
            (j, self.amps[slot(j, j0)])
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `E = Σ_j (jħ)²/2 |ψ_j|²`.
    pub fn energy(&self, hbar: f64) -> f64 {
        let n = self.amps.len();
        let mut acc = 0.0;
        for (k, a) in self.amps.iter().enumerate() {
            let j = index_to_j(k, self.half_size) as f64;
            acc += j * j * a.norm_sqr();
        }
        debug_assert_eq!(n, 2 * self.half_size);
        0.5 * hbar * hbar * acc
    }

    /// Probability in `|j| > 0.9 J`.
    pub fn tail_probability(&self) -> f64 {
        let j0 = self.half_size;
        let cut = (TAIL_FRACTION * j0 as f64).floor() as usize;
        let upper = &self.amps[cut + 1..j0];
        let lower = &self.amps[j0..2 * j0 - cut];
        upper.iter().chain(lower.iter()).map(|a| a.norm_sqr()).sum()
    }

    /// Euclidean distance `‖ψ - φ‖`.
    pub fn distance(&self, other: &QuantumState) -> f64 {
        assert_eq!(self.half_size, other.half_size, "grid sizes differ");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_half_size(half_size: usize) -> Result<()> {
    if half_size < 2 || !half_size.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "half grid size J = {half_size} must be a power of two ≥ 2"
        )));
    }
    Ok(())
}

#[inline]
fn slot(j: i64, half_size: usize) -> usize {
    if j >= 0 {
        j as usize
    } else {
        (j + 2 * half_size as i64) as usize
    }
}

#[inline]
fn index_to_j(k: usize, half_size: usize) -> i64 {
    if k < half_size {
        k as i64
    } else {
        k as i64 - 2 * half_size as i64
    }
}

/// Precomputed single-period evolution operator on a fixed grid.
pub struct Propagator {
    half_size: usize,
    hbar: f64,
    kick: Vec<Complex64>,
    /// `exp(-i j²ħ/2) / 2J`, applied after the first kick.
    first_free: Vec<Complex64>,
    /// `exp(+i j²ħ/2) / 2J`, applied after the second kick.
    second_free: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl fmt::Debug for Propagator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Propagator")
            .field("half_size", &self.half_size)
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl Propagator {
    pub fn new(
        potential: &PotentialSpec,
        kick: KickStrength,
        planck: &PlanckSpec,
        half_size: usize,
    ) -> Result<Self> {
        check_half_size(half_size)?;
        let n = 2 * half_size;
        let hbar = planck.hbar();
        if hbar <= 0.0 {
            return Err(Error::InvalidPlanck(format!("ħ = {hbar} must be positive")));
        }
        let alpha = kick.value() / hbar;
        // FFT slot n sits at angle 2πn/(2J), which is the grid point θ_{n-J}.
        let kick_phase = (0..n)
            .map(|k| {
                let theta = wrap_angle(TAU * k as f64 / n as f64);
                Complex64::from_polar(1.0, -alpha * potential.evaluate(theta))
            })
            .collect();
        let scale = 1.0 / n as f64;
        let first_free = (0..n)
            .map(|k| free_phase(index_to_j(k, half_size), 1, planck) * scale)
            .collect();
        let second_free = (0..n)
            .map(|k| free_phase(index_to_j(k, half_size), -1, planck) * scale)
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Propagator {
            half_size,
            hbar,
            kick: kick_phase,
            first_free,
            second_free,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn half_size(&self) -> usize {
        self.half_size
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Apply one period of `U` in place, without the aliasing guard.
    pub fn apply(&mut self, state: &mut QuantumState) {
        assert_eq!(
            state.half_size, self.half_size,
            "state grid does not match propagator grid"
        );
        let buf = &mut state.amps;
        for free in [&self.first_free, &self.second_free] {
            self.inverse.process_with_scratch(buf, &mut self.scratch);
            buf.iter_mut().zip(&self.kick).for_each(|(a, k)| *a *= k);
            self.forward.process_with_scratch(buf, &mut self.scratch);
            buf.iter_mut().zip(free.iter()).for_each(|(a, p)| *a *= p);
        }
    }

    /// Apply one period and enforce tail containment; `t` labels the error.
    pub fn step_checked(&mut self, state: &mut QuantumState, t: u64) -> Result<()> {
        self.apply(state);
        let tail = state.tail_probability();
        if tail > TAIL_LIMIT {
            return Err(Error::Aliasing {
                t,
                tail,
                half_size: self.half_size,
                suggested: 2 * self.half_size,
            });
        }
        Ok(())
    }
}

/// One period of `U` applied to `state`.
pub fn step(
    state: &QuantumState,
    potential: &PotentialSpec,
    kick: KickStrength,
    planck: &PlanckSpec,
) -> Result<QuantumState> {
    let mut prop = Propagator::new(potential, kick, planck, state.half_size)?;
    let mut next = state.clone();
    prop.step_checked(&mut next, 1)?;
    Ok(next)
}

/// Result of a quantum evolution.
#[derive(Debug, Clone)]
pub struct QuantumEvolution {
    pub series: EnergySeries,
    pub state: QuantumState,
    /// Largest `|‖ψ‖² - 1|` seen at any recorded step.
    pub max_norm_drift: f64,
}

/// Evolve for `steps` periods, recording `E(t)` on `schedule`.
pub fn evolve(
    initial: QuantumState,
    potential: &PotentialSpec,
    kick: KickStrength,
    planck: &PlanckSpec,
    steps: u64,
    schedule: &RecordSchedule,
) -> Result<QuantumEvolution> {
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let mut prop = Propagator::new(potential, kick, planck, initial.half_size)?;
    let mut meta = Metadata::new();
    meta.set("engine", "quantum");
    meta.set("potential", potential.name());
    meta.set("K", kick);
    meta.set("M", planck.m);
    meta.set("N", planck.n);
    meta.set("tilde", planck.tilde);
    meta.set("J", initial.half_size);
    let mut series = EnergySeries::new(meta);
    let mut state = initial;
    let mut max_norm_drift = (state.norm_sqr() - 1.0).abs();
    let hbar = prop.hbar();
    let times = schedule.times(steps);
    let mut next = times.iter().copied().peekable();
    for t in 1..=steps {
        prop.step_checked(&mut state, t)?;
        if next.peek() == Some(&t) {
            next.next();
            max_norm_drift = max_norm_drift.max((state.norm_sqr() - 1.0).abs());
            series.push(t, state.energy(hbar))?;
        }
    }
    Ok(QuantumEvolution {
        series,
        state,
        max_norm_drift,
    })
}

/// Column `⟨j|U|k⟩` for all `j`, returned as a state over the grid.
pub fn operator_column(
    k: i64,
    potential: &PotentialSpec,
    kick: KickStrength,
    planck: &PlanckSpec,
    half_size: usize,
) -> Result<QuantumState> {
    let basis = QuantumState::basis(k, half_size)?;
    step(&basis, potential, kick, planck)
}

/// `D = ħ²/2 Σ_j j² |⟨j|U|0⟩|²`, the coefficient of the early `E ≈ D t²` law.
pub fn ballistic_coefficient(
    potential: &PotentialSpec,
    kick: KickStrength,
    planck: &PlanckSpec,
    half_size: usize,
) -> Result<f64> {
    let column = operator_column(0, potential, kick, planck, half_size)?;
    Ok(column.energy(planck.hbar()))
}
