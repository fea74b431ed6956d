//! Power-law stage detection and extraction of `t_c`, `t_s`, `E_s`.
//!
//! A growth curve is split into stages by scanning the local log-log slope
//! over sliding windows one third of a decade wide. A stage is a run of at
//! least three consecutive windows whose slope stays within 0.25 of the
//! target exponent.
//!
//! * The ballistic stage is fitted as `A₂ t²`, the superballistic stage as
//!   `A₃ t³`, and `t_c = A₂/A₃` is where the two lines cross.
//! * `t_s` is the first time after the start of the superballistic stage at
//!   which `E` falls more than 5% below the free power-law fit of that stage,
//!   interpolated between records. The same quantity at 10% and 20% is
//!   reported for sensitivity.
//! * The windows are refined to `[t₁, t_c/2]` and `[2t_c, t_s/2]` until they
//!   stop moving. Without a `t²` stage the `t³` window starts one decade
//!   into its plateau.
//! * `E_s` is the mean energy over `[1.5 t_s, end]`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quantum::{KickStrength, PlanckSpec};
use crate::series::{EnergySeries, Metadata, Record};

/// Width of the exponent scan window in decades.
pub const SCAN_WIDTH: f64 = 1.0 / 3.0;
/// Step of the exponent scan in decades.
pub const SCAN_STEP: f64 = 1.0 / 12.0;
/// Maximum `|γ − target|` inside a plateau.
pub const PLATEAU_TOL: f64 = 0.25;
/// Minimum number of consecutive windows forming a plateau.
pub const PLATEAU_MIN_WINDOWS: usize = 3;
/// Relative drop below the t³ fit that marks saturation.
pub const SATURATION_DROP: f64 = 0.05;
/// Alternative drops reported as a sensitivity check.
pub const SATURATION_DROP_ALTERNATIVES: [f64; 2] = [0.10, 0.20];
/// Minimum number of positive records in a power-law fit.
pub const MIN_FIT_POINTS: usize = 10;
/// Two-sided 95% normal quantile used for confidence half-widths.
const Z95: f64 = 1.96;

/// Result of a least-squares fit of `log E = log A + γ log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub amplitude: f64,
    /// Standard error of the slope.
    pub gamma_se: f64,
    pub points: usize,
    pub window: (f64, f64),
}

impl PowerLawFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * t.powf(self.gamma)
    }

    /// 95% confidence half-width of `γ`.
    pub fn half_width(&self) -> f64 {
        Z95 * self.gamma_se
    }
}

fn positive(records: &[Record]) -> impl Iterator<Item = (f64, f64)> + '_ {
    records
        .iter()
        .filter(|r| r.energy > 0.0 && r.t > 0)
        .map(|r| ((r.t as f64).ln(), r.energy.ln()))
}

/// Ordinary least squares on `(x, y)`; returns `(slope, intercept, slope_se)`.
fn ols(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if n > 2 {
        let rss: f64 = points
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, intercept, se))
}

/// Fit `E = A t^γ` over the records with `lo ≤ t ≤ hi`. Zero energies are skipped.
pub fn fit_power_law(series: &EnergySeries, window: (f64, f64)) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = positive(series.window(window.0, window.1)).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} records with E > 0; need at least {MIN_FIT_POINTS}",
            window.0,
            window.1,
            pts.len()
        )));
    }
    let (gamma, intercept, gamma_se) = ols(&pts)
        .ok_or_else(|| Error::Fit(format!("degenerate window [{}, {}]", window.0, window.1)))?;
    Ok(PowerLawFit {
        gamma,
        amplitude: intercept.exp(),
        gamma_se,
        points: pts.len(),
        window,
    })
}

/// Amplitude `A` of `E = A t^γ` at fixed `γ`: the geometric mean of `E/t^γ`.
pub fn fit_fixed_exponent(series: &EnergySeries, window: (f64, f64), gamma: f64) -> Result<f64> {
    let logs: Vec<f64> = positive(series.window(window.0, window.1))
        .map(|(lt, le)| le - gamma * lt)
        .collect();
    if logs.is_empty() {
        return Err(Error::Fit(format!(
            "no records with E > 0 in [{}, {}]",
            window.0, window.1
        )));
    }
    Ok((logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Slope of one scan window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExponent {
    pub t_lo: f64,
    pub t_hi: f64,
    pub gamma: f64,
}

impl LocalExponent {
    pub fn t_mid(&self) -> f64 {
        (self.t_lo * self.t_hi).sqrt()
    }
}

/// Local log-log slopes over sliding windows. Windows with fewer than three
/// positive records get `NaN`.
pub fn local_exponents(series: &EnergySeries) -> Vec<LocalExponent> {
    let recs = series.records();
    let (Some(first), Some(last)) = (recs.first(), recs.last()) else {
        return Vec::new();
    };
    let lo = (first.t.max(1) as f64).log10();
    let hi = (last.t.max(1) as f64).log10();
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let a = lo + k as f64 * SCAN_STEP;
        let b = a + SCAN_WIDTH;
        if b > hi + 1e-9 {
            break;
        }
        let (t_lo, t_hi) = (10f64.powf(a), 10f64.powf(b));
        let pts: Vec<(f64, f64)> =
            positive(series.window(t_lo * (1.0 - 1e-12), t_hi * (1.0 + 1e-12))).collect();
        let gamma = if pts.len() >= 3 {
            ols(&pts).map_or(f64::NAN, |f| f.0)
        } else {
            f64::NAN
        };
        out.push(LocalExponent { t_lo, t_hi, gamma });
        k += 1;
    }
    out
}

/// A run of scan windows whose slope stays near a target exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub target: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub windows: usize,
}

impl Plateau {
    /// Span in decades.
    pub fn decades(&self) -> f64 {
        (self.t_hi / self.t_lo).log10()
    }
}

pub fn find_plateaus(scan: &[LocalExponent], target: f64) -> Vec<Plateau> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let flush = |s: usize, e: usize, out: &mut Vec<Plateau>| {
        if e - s >= PLATEAU_MIN_WINDOWS {
            out.push(Plateau {
                target,
                t_lo: scan[s].t_lo,
                t_hi: scan[e - 1].t_hi,
                windows: e - s,
            });
        }
    };
    for (i, w) in scan.iter().enumerate() {
        let inside = (w.gamma - target).abs() < PLATEAU_TOL;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                flush(s, i, &mut out);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        flush(s, scan.len(), &mut out);
    }
    out
}

fn longest(plateaus: impl Iterator<Item = Plateau>) -> Option<Plateau> {
    plateaus.max_by(|a, b| a.decades().total_cmp(&b.decades()))
}

/// A fitted exponent with its 95% half-width and window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageFit {
    pub gamma: f64,
    pub half_width: f64,
    pub window: (f64, f64),
    /// Window narrower than one decade.
    pub narrow: bool,
}

impl StageFit {
    fn from_fit(fit: &PowerLawFit) -> Self {
        StageFit {
            gamma: fit.gamma,
            half_width: fit.half_width(),
            window: fit.window,
            narrow: (fit.window.1 / fit.window.0).log10() < 1.0,
        }
    }
}

/// Output of [`extract_tc_ts`].
#[derive(Debug, Clone, PartialEq)]
pub struct Stages {
    pub ballistic: Option<StageFit>,
    pub superballistic: Option<StageFit>,
    /// Fixed-exponent amplitude of the `t²` stage.
    pub a2: Option<f64>,
    /// Fixed-exponent amplitude of the `t³` stage.
    pub a3: Option<f64>,
    pub t_c: Option<f64>,
    pub t_s: Option<f64>,
    /// `t_s` at the alternative drop thresholds.
    pub t_s_alternatives: [Option<f64>; 2],
}

/// First time after `from` where `E < (1 − drop)·fit(t)`, interpolated in
/// `ln t` between the two records that bracket the crossing.
fn first_drop(series: &EnergySeries, fit: &PowerLawFit, from: f64, drop: f64) -> Option<f64> {
    let level = 1.0 - drop;
    let mut prev: Option<(f64, f64)> = None;
    for r in series.records().iter().filter(|r| r.t as f64 >= from) {
        let t = r.t as f64;
        let ratio = r.energy / fit.eval(t);
        if ratio < level {
            return Some(match prev {
                Some((tp, rp)) => {
                    let f = (rp - level) / (rp - ratio);
                    (tp.ln() + f * (t.ln() - tp.ln())).exp()
                }
                None => t,
            });
        }
        prev = Some((t, ratio));
    }
    None
}

/// Detect the `t²` and `t³` stages and extract `t_c` and `t_s`.
///
/// Without a `t³` stage only the ballistic fit is returned. Without a `t²`
/// stage before it, `t_c` is undefined.
pub fn extract_tc_ts(series: &EnergySeries) -> Result<Stages> {
    let first_t = series
        .records()
        .first()
        .map(|r| r.t.max(1) as f64)
        .ok_or_else(|| Error::SeriesTooShort("empty series".into()))?;
    let scan = local_exponents(series);
    let cubic = longest(find_plateaus(&scan, 3.0).into_iter());
    let quadratic = find_plateaus(&scan, 2.0);

    let Some(cubic) = cubic else {
        let Some(q) = longest(quadratic.into_iter()) else {
            return Err(Error::Fit("no t² or t³ stage detected".into()));
        };
        let fit = fit_power_law(series, (q.t_lo, q.t_hi))?;
        return Ok(Stages {
            ballistic: Some(StageFit::from_fit(&fit)),
            superballistic: None,
            a2: Some(fit_fixed_exponent(series, (q.t_lo, q.t_hi), 2.0)?),
            a3: None,
            t_c: None,
            t_s: None,
            t_s_alternatives: [None, None],
        });
    };
    let quad = longest(quadratic.into_iter().filter(|p| p.t_lo < cubic.t_lo));

    let mut w2 = quad.map(|q| (first_t, q.t_hi.min(cubic.t_lo)));
    // with no t² stage to anchor it, skip the plateau's first decade
    let start3 = if quad.is_some() {
        cubic.t_lo
    } else {
        (10.0 * cubic.t_lo).min((cubic.t_lo * cubic.t_hi).sqrt())
    };
    let mut w3 = (start3, cubic.t_hi);
    let mut fit3 = fit_power_law(series, w3)?;
    let mut t_c = None;
    for _ in 0..20 {
        let a3 = fit_fixed_exponent(series, w3, 3.0)?;
        t_c = match w2 {
            Some(w) => Some(fit_fixed_exponent(series, w, 2.0)? / a3),
            None => None,
        };
        let t_s = first_drop(series, &fit3, w3.0, SATURATION_DROP);
        let lo = t_c.map_or(start3, |tc| 2.0 * tc);
        let hi = t_s.map_or(cubic.t_hi, |ts| 0.5 * ts);
        let next3 = (lo, hi);
        let next2 = t_c.map(|tc| (first_t, 0.5 * tc));
        let Ok(next_fit) = fit_power_law(series, next3) else {
            break;
        };
        if let Some(w) = next2 {
            if fit_fixed_exponent(series, w, 2.0).is_err() {
                break;
            }
        }
        let moved = same_records(series, next3, w3)
            && w2
                .zip(next2)
                .is_none_or(|(a, b)| same_records(series, a, b));
        w3 = next3;
        w2 = next2.or(w2);
        fit3 = next_fit;
        if moved {
            break;
        }
    }
    let a3 = fit_fixed_exponent(series, w3, 3.0)?;
    let a2 = w2.map(|w| fit_fixed_exponent(series, w, 2.0)).transpose()?;
    if let Some(a2) = a2 {
        t_c = Some(a2 / a3);
    }
    let t_s = first_drop(series, &fit3, w3.0, SATURATION_DROP);
    let ballistic = match w2 {
        Some(w) => fit_power_law(series, w)
            .ok()
            .map(|f| StageFit::from_fit(&f)),
        None => None,
    };
    Ok(Stages {
        ballistic,
        superballistic: Some(StageFit::from_fit(&fit3)),
        a2,
        a3: Some(a3),
        t_c,
        t_s,
        t_s_alternatives: SATURATION_DROP_ALTERNATIVES.map(|d| first_drop(series, &fit3, w3.0, d)),
    })
}

fn same_records(series: &EnergySeries, a: (f64, f64), b: (f64, f64)) -> bool {
    let wa = series.window(a.0, a.1);
    let wb = series.window(b.0, b.1);
    wa.len() == wb.len() && wa.first().map(|r| r.t) == wb.first().map(|r| r.t)
}

/// Saturation energy and its oscillation range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub window: (f64, f64),
}

/// Mean energy over `[1.5 t_s, end]`. The series must reach `3 t_s`.
pub fn extract_es(series: &EnergySeries, t_s: f64) -> Result<Saturation> {
    let end = series.last_time().unwrap_or(0) as f64;
    if !(t_s > 0.0) || end < 3.0 * t_s {
        return Err(Error::SeriesTooShort(format!(
            "E_s needs the series to reach t = {:.0} (3 t_s); it ends at {end}",
            3.0 * t_s
        )));
    }
    let recs = series.window(1.5 * t_s, end);
    if recs.is_empty() {
        return Err(Error::SeriesTooShort("no records after 1.5 t_s".into()));
    }
    let n = recs.len() as f64;
    Ok(Saturation {
        mean: recs.iter().map(|r| r.energy).sum::<f64>() / n,
        min: recs.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min),
        max: recs.iter().map(|r| r.energy).fold(0.0, f64::max),
        window: (1.5 * t_s, end),
    })
}

/// Everything extracted from one series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    /// Run parameters copied from the series metadata.
    pub meta: Metadata,
    pub gamma_ballistic: Option<StageFit>,
    pub gamma_super: Option<StageFit>,
    pub t_c: Option<f64>,
    pub t_s: Option<f64>,
    pub t_s_alternatives: [Option<f64>; 2],
    pub e_s: Option<Saturation>,
    /// `A₂` from the early-stage fit.
    pub d_fit: Option<f64>,
    /// `⟨0|U†p²U|0⟩/2`, when computed.
    pub d_column: Option<f64>,
    /// `A₃` from the superballistic fit.
    pub a3: Option<f64>,
}

const REPORT_META_KEYS: [&str; 7] = ["engine", "potential", "K", "M", "N", "tilde", "seed"];

const REPORT_COLUMNS: [&str; 24] = [
    "engine",
    "potential",
    "K",
    "M",
    "N",
    "tilde",
    "seed",
    "gamma_ballistic",
    "gamma_ballistic_err",
    "ballistic_lo",
    "ballistic_hi",
    "gamma_super",
    "gamma_super_err",
    "super_lo",
    "super_hi",
    "t_c",
    "t_s",
    "t_s_10",
    "t_s_20",
    "E_s",
    "E_s_min",
    "E_s_max",
    "D_fit",
    "D_column",
];

/// Run the full pipeline. `E_s` is omitted when the series is too short.
pub fn analyze(series: &EnergySeries) -> Result<FitReport> {
    let stages = extract_tc_ts(series)?;
    let e_s = stages.t_s.and_then(|ts| extract_es(series, ts).ok());
    let mut meta = Metadata::new();
    for key in REPORT_META_KEYS {
        if let Some(v) = series.meta.get(key) {
            meta.set(key, v);
        }
    }
    Ok(FitReport {
        meta,
        gamma_ballistic: stages.ballistic,
        gamma_super: stages.superballistic,
        t_c: stages.t_c,
        t_s: stages.t_s,
        t_s_alternatives: stages.t_s_alternatives,
        e_s,
        d_fit: stages.a2,
        d_column: None,
        a3: stages.a3,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl FitReport {
    /// `h̃` from the metadata.
    pub fn tilde(&self) -> Option<f64> {
        self.meta.get("tilde").and_then(|v| v.parse().ok())
    }

    pub fn kick(&self) -> Option<f64> {
        self.meta.get("K").and_then(|v| v.parse().ok())
    }

    fn values(&self) -> Vec<String> {
        let mut v: Vec<String> = REPORT_META_KEYS
            .iter()
            .map(|k| self.meta.get(k).unwrap_or("").to_string())
            .collect();
        for stage in [&self.gamma_ballistic, &self.gamma_super] {
            v.push(opt(stage.map(|s| s.gamma)));
            v.push(opt(stage.map(|s| s.half_width)));
            v.push(opt(stage.map(|s| s.window.0)));
            v.push(opt(stage.map(|s| s.window.1)));
        }
        v.push(opt(self.t_c));
        v.push(opt(self.t_s));
        v.push(opt(self.t_s_alternatives[0]));
        v.push(opt(self.t_s_alternatives[1]));
        v.push(opt(self.e_s.map(|e| e.mean)));
        v.push(opt(self.e_s.map(|e| e.min)));
        v.push(opt(self.e_s.map(|e| e.max)));
        v.push(opt(self.d_fit));
        v.push(opt(self.d_column));
        v
    }

    /// `key = value` lines, one per field; missing values are left blank.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in REPORT_COLUMNS.iter().zip(self.values()) {
            let _ = writeln!(out, "{k} = {v}");
        }
        let narrow = |s: &Option<StageFit>| s.map_or(String::new(), |s| s.narrow.to_string());
        let _ = writeln!(out, "ballistic_narrow = {}", narrow(&self.gamma_ballistic));
        let _ = writeln!(out, "super_narrow = {}", narrow(&self.gamma_super));
        out
    }

    pub fn csv_header() -> String {
        REPORT_COLUMNS.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.values().join(",")
    }

    /// Parse a row written by [`FitReport::to_csv_row`] against `header`.
    pub fn from_csv_row(header: &str, row: &str) -> Result<Self> {
        let keys: Vec<&str> = header.split(',').map(str::trim).collect();
        let vals: Vec<&str> = row.split(',').map(str::trim).collect();
        if keys.len() != vals.len() {
            return Err(Error::Fit(format!(
                "row has {} fields, header has {}",
                vals.len(),
                keys.len()
            )));
        }
        let get = |k: &str| {
            keys.iter()
                .position(|h| *h == k)
                .map(|i| vals[i])
                .filter(|v| !v.is_empty())
        };
        let num = |k: &str| -> Result<Option<f64>> {
            get(k)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Fit(format!("bad number `{v}` in column {k}")))
                })
                .transpose()
        };
        let stage = |g: &str, e: &str, lo: &str, hi: &str| -> Result<Option<StageFit>> {
            Ok(match (num(g)?, num(e)?, num(lo)?, num(hi)?) {
                (Some(gamma), Some(half_width), Some(a), Some(b)) => Some(StageFit {
                    gamma,
                    half_width,
                    window: (a, b),
                    narrow: (b / a).log10() < 1.0,
                }),
                _ => None,
            })
        };
        let mut meta = Metadata::new();
        for k in REPORT_META_KEYS {
            if let Some(v) = get(k) {
                meta.set(k, v);
            }
        }
        let e_s = match (num("E_s")?, num("E_s_min")?, num("E_s_max")?, num("t_s")?) {
            (Some(mean), Some(min), Some(max), Some(ts)) => Some(Saturation {
                mean,
                min,
                max,
                window: (1.5 * ts, f64::NAN),
            }),
            _ => None,
        };
        Ok(FitReport {
            meta,
            gamma_ballistic: stage(
                "gamma_ballistic",
                "gamma_ballistic_err",
                "ballistic_lo",
                "ballistic_hi",
            )?,
            gamma_super: stage("gamma_super", "gamma_super_err", "super_lo", "super_hi")?,
            t_c: num("t_c")?,
            t_s: num("t_s")?,
            t_s_alternatives: [num("t_s_10")?, num("t_s_20")?],
            e_s,
            d_fit: num("D_fit")?,
            d_column: num("D_column")?,
            a3: None,
        })
    }
}

/// Slope of a log-log regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub slope: f64,
    pub se: f64,
    /// Intercept of `log y` at `log x = 0` (natural logs).
    pub intercept: f64,
    pub points: usize,
}

/// Regress `ln y` on `ln x`. Needs at least three positive pairs.
pub fn log_log_slope(pairs: &[(f64, f64)]) -> Result<Slope> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "log-log regression needs at least 3 positive points, got {}",
            pts.len()
        )));
    }
    let (slope, intercept, se) =
        ols(&pts).ok_or_else(|| Error::Fit("all x values coincide".into()))?;
    Ok(Slope {
        slope,
        se,
        intercept,
        points: pts.len(),
    })
}

/// Slopes of `t_c`, `t_s`, `E_s` against `h̃`; a quantity missing from
/// too many reports gets `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSlopes {
    pub t_c: Option<Slope>,
    pub t_s: Option<Slope>,
    pub e_s: Option<Slope>,
}

pub fn scaling_regression(reports: &[FitReport]) -> Result<ScalingSlopes> {
    let mut tildes: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.tilde())
        .map(f64::abs)
        .collect();
    tildes.sort_by(f64::total_cmp);
    tildes.dedup();
    let (Some(&lo), Some(&hi)) = (tildes.first(), tildes.last()) else {
        return Err(Error::Fit("no reports carry h̃".into()));
    };
    if tildes.len() < 4 || !(lo > 0.0) || (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::Fit(format!(
            "scaling regression needs ≥ 4 values of h̃ spanning ≥ 1.5 decades, got {} over [{lo}, {hi}]",
            tildes.len()
        )));
    }
    let slope_of = |f: &dyn Fn(&FitReport) -> Option<f64>| {
        let pairs: Vec<(f64, f64)> = reports
            .iter()
            .filter_map(|r| Some((r.tilde()?.abs(), f(r)?)))
            .collect();
        if pairs.len() >= 4 {
            log_log_slope(&pairs).ok()
        } else {
            None
        }
    };
    Ok(ScalingSlopes {
        t_c: slope_of(&|r| r.t_c),
        t_s: slope_of(&|r| r.t_s),
        e_s: slope_of(&|r| r.e_s.map(|e| e.mean)),
    })
}

/// `16K³h̃/(3π⁴ħ)`: large-`t` amplitude of the `V_A` cubic law.
pub fn cubic_prefactor(kick: KickStrength, planck: &PlanckSpec) -> f64 {
    let k = kick.value();
    16.0 * k * k * k * planck.tilde().abs() / (3.0 * std::f64::consts::PI.powi(4) * planck.hbar())
}

/// Signed relative error of the fitted `t³` amplitude over `window`.
pub fn cubic_prefactor_check(
    series: &EnergySeries,
    kick: KickStrength,
    planck: &PlanckSpec,
    window: (f64, f64),
) -> Result<f64> {
    let predicted = cubic_prefactor(kick, planck);
    let fitted = fit_fixed_exponent(series, window, 3.0)?;
    Ok(fitted / predicted - 1.0)
}
