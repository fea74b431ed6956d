//! 2π-periodic kick potentials, their forces `f = -dV/dθ`, and the
//! symmetry classification that predicts the spreading regime.
//!
//! Three families are supported: piecewise-linear potentials given by a
//! vertex list (the built-in `V_A`, `V_B`, `V_C` and user-supplied ones), the
//! piecewise-quadratic `V_D`, and single harmonics `cos(mθ)`.
//!
//! ```
//! use qdkr::potentials::{PotentialSpec, Regime};
//!
//! let va = PotentialSpec::va();
//! assert_eq!(va.evaluate(0.0), 1.0);
//! assert_eq!(va.evaluate(-std::f64::consts::PI), -1.0);
//!
//! let tags = va.classify_symmetries();
//! assert!(tags.shift_antisymmetric && tags.reflection_symmetric && !tags.kam);
//! assert_eq!(tags.predict_regime(), Regime::Superballistic);
//! ```

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default shoulder height of `V_B` and `V_C`.
pub const DEFAULT_SHOULDER: f64 = 0.5;

/// Number of grid points used when measuring symmetries.
pub const SYMMETRY_GRID: usize = 4096;

/// Tolerance for the measured symmetries.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Reduce an angle into `[-π, π)`.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let r = (theta + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Which potential a spec was built from; used for naming and config output.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Va,
    Vb { g: f64 },
    Vc { g: f64 },
    Vd,
    Cosine { harmonic: u32 },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// Vertices sorted by angle inside `[-π, π)`, with precomputed slopes.
    /// Segment `i` runs from vertex `i` to vertex `i + 1`; the last one wraps
    /// to the first vertex shifted by 2π.
    Linear {
        angles: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
    Quadratic,
    Cosine(u32),
}

/// A 2π-periodic kick potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    kind: PotentialKind,
    shape: Shape,
}

impl PotentialSpec {
    /// `V_A`: turning points (−π, −1) and (0, 1).
    pub fn va() -> Self {
        let mut spec = Self::piecewise_linear(&[(-PI, -1.0), (0.0, 1.0)])
            .expect("built-in vertices are valid");
        spec.kind = PotentialKind::Va;
        spec
    }

    /// `V_B`: adds (−π/2, g) and (π/2, −g) to the `V_A` turning points.
    pub fn vb(g: f64) -> Result<Self> {
        check_shoulder(g)?;
        let mut spec =
            Self::piecewise_linear(&[(-PI, -1.0), (-PI / 2.0, g), (0.0, 1.0), (PI / 2.0, -g)])?;
        spec.kind = PotentialKind::Vb { g };
        Ok(spec)
    }

    /// `V_C`: adds (−π/2, g) and (π/2, g) to the `V_A` turning points.
    pub fn vc(g: f64) -> Result<Self> {
        check_shoulder(g)?;
        let mut spec =
            Self::piecewise_linear(&[(-PI, -1.0), (-PI / 2.0, g), (0.0, 1.0), (PI / 2.0, g)])?;
        spec.kind = PotentialKind::Vc { g };
        Ok(spec)
    }

    /// The piecewise-quadratic `V_D`:
    /// `1 - 2(θ/π)²` on `[-π, 0)` and `2(θ/π - 1)² - 1` on `[0, π)`.
    pub fn vd() -> Self {
        PotentialSpec {
            kind: PotentialKind::Vd,
            shape: Shape::Quadratic,
        }
    }

    /// `cos(mθ)`; `m = 1` is the standard rotor potential.
    pub fn cosine(harmonic: u32) -> Result<Self> {
        if harmonic == 0 {
            return Err(Error::InvalidPotential(
                "cosine harmonic must be at least 1".into(),
            ));
        }
        Ok(PotentialSpec {
            kind: PotentialKind::Cosine { harmonic },
            shape: Shape::Cosine(harmonic),
        })
    }

    /// A custom piecewise-linear potential through the given `(θ, V)` vertices.
    ///
    /// Angles must lie in `[-π, π)` and be strictly increasing. The curve closes
    /// periodically: the last vertex connects to the first one shifted by 2π.
    pub fn piecewise_linear(vertices: &[(f64, f64)]) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPotential(
                "a piecewise-linear potential needs at least two vertices".into(),
            ));
        }
        for (i, &(theta, v)) in vertices.iter().enumerate() {
            if !theta.is_finite() || !v.is_finite() {
                return Err(Error::InvalidPotential(format!(
                    "vertex {i} is not finite: ({theta}, {v})"
                )));
            }
            if !(-PI..PI).contains(&theta) {
                return Err(Error::InvalidPotential(format!(
                    "vertex {i} angle {theta} lies outside [-π, π)"
                )));
            }
        }
        if let Some(i) = vertices.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidPotential(format!(
                "vertex angles must be strictly increasing (vertex {} at {} follows {})",
                i + 1,
                vertices[i + 1].0,
                vertices[i].0
            )));
        }
        let angles: Vec<f64> = vertices.iter().map(|v| v.0).collect();
        let values: Vec<f64> = vertices.iter().map(|v| v.1).collect();
        let n = vertices.len();
        let slopes = (0..n)
            .map(|i| {
                let (t0, v0) = vertices[i];
                let (t1, v1) = if i + 1 < n {
                    vertices[i + 1]
                } else {
                    (vertices[0].0 + TAU, vertices[0].1)
                };
                (v1 - v0) / (t1 - t0)
            })
            .collect();
        Ok(PotentialSpec {
            kind: PotentialKind::Custom,
            shape: Shape::Linear {
                angles,
                values,
                slopes,
            },
        })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Vertex list for piecewise-linear potentials.
    pub fn vertices(&self) -> Option<Vec<(f64, f64)>> {
        match &self.shape {
            Shape::Linear { angles, values, .. } => {
                Some(angles.iter().copied().zip(values.iter().copied()).collect())
            }
            _ => None,
        }
    }

    /// Shoulder parameter for `V_B`/`V_C`.
    pub fn shoulder(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Vb { g } | PotentialKind::Vc { g } => Some(g),
            _ => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.shape, Shape::Cosine(_))
    }

    /// `V(θ)` with θ reduced into `[-π, π)`.
    pub fn evaluate(&self, theta: f64) -> f64 {
        let theta = wrap_angle(theta);
        match &self.shape {
            Shape::Linear {
                angles,
                values,
                slopes,
            } => {
                let (i, x) = locate(angles, theta);
                values[i] + slopes[i] * (x - angles[i])
            }
            Shape::Quadratic => {
                let x = theta / PI;
                if theta < 0.0 {
                    1.0 - 2.0 * x * x
                } else {
                    let y = x - 1.0;
                    2.0 * y * y - 1.0
                }
            }
            Shape::Cosine(m) => (*m as f64 * theta).cos(),
        }
    }

    /// `f(θ) = -dV/dθ`. At a kink the right-hand segment is used.
    pub fn force(&self, theta: f64) -> f64 {
        let theta = wrap_angle(theta);
        match &self.shape {
            Shape::Linear { angles, slopes, .. } => -slopes[locate(angles, theta).0],
            Shape::Quadratic => {
                if theta < 0.0 {
                    4.0 * theta / (PI * PI)
                } else {
                    -4.0 * (theta / PI - 1.0) / PI
                }
            }
            Shape::Cosine(m) => {
                let m = *m as f64;
                m * (m * theta).sin()
            }
        }
    }

    /// Measure the symmetry tags on a dense grid.
    pub fn classify_symmetries(&self) -> SymmetryTags {
        let mut shift = true;
        let mut reflection = true;
        for k in 0..SYMMETRY_GRID {
            let theta = -PI + TAU * k as f64 / SYMMETRY_GRID as f64;
            let v = self.evaluate(theta);
            if (v + self.evaluate(theta + PI)).abs() >= SYMMETRY_TOL {
                shift = false;
            }
            if (v - self.evaluate(-theta)).abs() >= SYMMETRY_TOL {
                reflection = false;
            }
            if !shift && !reflection {
                break;
            }
        }
        SymmetryTags {
            shift_antisymmetric: shift,
            reflection_symmetric: reflection,
            kam: self.is_analytic(),
        }
    }

    /// Short name as used in configuration files.
    pub fn name(&self) -> String {
        match self.kind {
            PotentialKind::Va => "va".into(),
            PotentialKind::Vb { .. } => "vb".into(),
            PotentialKind::Vc { .. } => "vc".into(),
            PotentialKind::Vd => "vd".into(),
            PotentialKind::Cosine { harmonic } => format!("cos:{harmonic}"),
            PotentialKind::Custom => "custom".into(),
        }
    }

    /// Build a potential from its configuration name and optional shoulder `g`.
    ///
    /// Custom potentials are built with [`PotentialSpec::piecewise_linear`].
    pub fn from_name(name: &str, g: Option<f64>) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        let g_or_default = g.unwrap_or(DEFAULT_SHOULDER);
        let spec = match name.as_str() {
            "va" => Self::va(),
            "vb" => Self::vb(g_or_default)?,
            "vc" => Self::vc(g_or_default)?,
            "vd" => Self::vd(),
            other => {
                if let Some(m) = other.strip_prefix("cos:") {
                    let m: u32 = m.parse().map_err(|_| {
                        Error::InvalidPotential(format!("bad cosine harmonic in `{other}`"))
                    })?;
                    Self::cosine(m)?
                } else if other == "cos" {
                    Self::cosine(1)?
                } else {
                    return Err(Error::InvalidPotential(format!(
                        "unknown potential `{other}` (expected va, vb, vc, vd, cos:m or custom)"
                    )));
                }
            }
        };
        if g.is_some() && spec.shoulder().is_none() {
            return Err(Error::InvalidPotential(format!(
                "shoulder g only applies to vb and vc, not `{name}`"
            )));
        }
        Ok(spec)
    }
}

fn check_shoulder(g: f64) -> Result<()> {
    if g.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!(
            "shoulder g = {g} is not finite"
        )))
    }
}

/// Segment index containing `theta`, and the angle to interpolate at (shifted
/// by 2π when θ precedes the first vertex and belongs to the wrap segment).
#[inline]
fn locate(angles: &[f64], theta: f64) -> (usize, f64) {
    let idx = angles.partition_point(|&a| a <= theta);
    if idx == 0 {
        (angles.len() - 1, theta + TAU)
    } else {
        (idx - 1, theta)
    }
}

/// Measured symmetry properties of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryTags {
    /// `V(θ) = -V(θ + π)`.
    pub shift_antisymmetric: bool,
    /// `V(θ) = V(-θ)`.
    pub reflection_symmetric: bool,
    /// Analytic on the whole circle.
    pub kam: bool,
}

/// Expected wavepacket spreading near `ħ ≈ 2πM/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Superballistic,
    Exponential,
    Ballistic,
}

impl SymmetryTags {
    pub fn predict_regime(&self) -> Regime {
        match (self.shift_antisymmetric, self.kam) {
            (true, false) => Regime::Superballistic,
            (true, true) => Regime::Exponential,
            _ => Regime::Ballistic,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Superballistic => "superballistic",
            Regime::Exponential => "exponential",
            Regime::Ballistic => "ballistic",
        })
    }
}

/// Parse a vertex list of the form `theta:v, theta:v, ...`.
///
/// Angles accept a `pi` suffix for multiples of π (`-1pi`, `0.5pi`, `-pi`).
pub fn parse_vertices(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (theta, v) = item.split_once(':').ok_or_else(|| {
                Error::InvalidPotential(format!("vertex `{item}` is not of the form theta:v"))
            })?;
            let theta = parse_angle(theta.trim())?;
            let v = f64::from_str(v.trim())
                .map_err(|_| Error::InvalidPotential(format!("bad vertex value in `{item}`")))?;
            Ok((theta, v))
        })
        .collect()
}

/// Inverse of [`parse_vertices`]; angles are written as plain numbers.
pub fn format_vertices(vertices: &[(f64, f64)]) -> String {
    vertices
        .iter()
        .map(|(t, v)| format!("{t:e}:{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_angle(s: &str) -> Result<f64> {
    let bad = || Error::InvalidPotential(format!("bad vertex angle `{s}`"));
    if let Some(head) = s.strip_suffix("pi") {
        let factor = match head.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => f64::from_str(h.trim_end_matches('*')).map_err(|_| bad())?,
        };
        Ok(factor * PI)
    } else {
        f64::from_str(s).map_err(|_| bad())
    }
}
