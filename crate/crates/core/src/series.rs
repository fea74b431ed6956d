//! Energy time series, record schedules and their CSV form.
//!
//! The CSV layout is a block of `# key=value` metadata lines, a `t,E`
//! column header, then one row per recorded kick:
//!
//! ```text
//! # engine=quantum
//! # potential=va
//! # K=5
//! t,E
//! 1,1.1547150013335927e-1
//! 2,4.576591805421135e-1
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One recorded sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// Kick count.
    pub t: u64,
    /// Kinetic energy `⟨p²/2⟩`.
    pub energy: f64,
}

/// Ordered `key=value` metadata attached to a series.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata(Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert or replace a key, keeping first-insertion order.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A time series `E(t)` with strictly increasing `t` and `E ≥ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergySeries {
    records: Vec<Record>,
    pub meta: Metadata,
}

impl EnergySeries {
    pub fn new(meta: Metadata) -> Self {
        EnergySeries {
            records: Vec::new(),
            meta,
        }
    }

    /// Build a series from `(t, E)` pairs, checking the invariants.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut series = EnergySeries::default();
        for (t, e) in pairs {
            series.push(t, e)?;
        }
        Ok(series)
    }

    pub fn push(&mut self, t: u64, energy: f64) -> Result<()> {
        if !(energy >= 0.0 && energy.is_finite()) {
            return Err(Error::InvalidState(format!(
                "energy at t = {t} is {energy}; expected a finite non-negative value"
            )));
        }
        if let Some(last) = self.records.last() {
            if t <= last.t {
                return Err(Error::InvalidState(format!(
                    "series times must increase strictly ({t} after {})",
                    last.t
                )));
            }
        }
        self.records.push(Record { t, energy });
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last_time(&self) -> Option<u64> {
        self.records.last().map(|r| r.t)
    }

    /// Energy at exactly `t`, if recorded.
    pub fn at(&self, t: u64) -> Option<f64> {
        self.records
            .binary_search_by_key(&t, |r| r.t)
            .ok()
            .map(|i| self.records[i].energy)
    }

    /// Records with `lo ≤ t ≤ hi`.
    pub fn window(&self, lo: f64, hi: f64) -> &[Record] {
        let start = self.records.partition_point(|r| (r.t as f64) < lo);
        let end = self.records.partition_point(|r| (r.t as f64) <= hi);
        &self.records[start..end.max(start)]
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.meta.iter() {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("t,E\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:e}", r.t, r.energy);
        }
        out
    }

    pub fn parse_csv(text: &str) -> std::result::Result<Self, String> {
        let mut meta = Metadata::new();
        let mut series = EnergySeries::default();
        let mut seen_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(kv) = line.strip_prefix('#') {
                let (k, v) = kv
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| format!("line {}: metadata is not key=value", lineno + 1))?;
                meta.set(k.trim(), v.trim());
                continue;
            }
            if !seen_header {
                if line.replace(' ', "") != "t,E" {
                    return Err(format!("line {}: expected `t,E` header", lineno + 1));
                }
                seen_header = true;
                continue;
            }
            let (t, e) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: expected `t,E` row", lineno + 1))?;
            let t: u64 = t
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad time `{t}`", lineno + 1))?;
            let e: f64 = e
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad energy `{e}`", lineno + 1))?;
            series
                .push(t, e)
                .map_err(|err| format!("line {}: {err}", lineno + 1))?;
        }
        if !seen_header {
            return Err("missing `t,E` header".into());
        }
        series.meta = meta;
        Ok(series)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse_csv(&text).map_err(|reason| Error::Parse {
            path: path.to_path_buf(),
            reason,
        })
    }

    /// Write atomically: a sibling temp file is renamed over `path`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Default growth factor of the logarithmic schedule.
pub const LOG_RATIO: f64 = 1.1;

/// Which kicks get recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordSchedule {
    /// Every `n`-th kick.
    Every(u64),
    /// Rounded powers of a ratio, deduplicated.
    Logarithmic(f64),
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule::Logarithmic(LOG_RATIO)
    }
}

impl RecordSchedule {
    /// Recorded kick counts in `1..=steps`. The final step is always included.
    pub fn times(&self, steps: u64) -> Vec<u64> {
        let mut out = Vec::new();
        match *self {
            RecordSchedule::Every(n) => {
                let n = n.max(1);
                out.extend((1..=steps / n).map(|k| k * n));
            }
            RecordSchedule::Logarithmic(ratio) => {
                let ratio = if ratio > 1.0 { ratio } else { LOG_RATIO };
                let mut x = 1.0f64;
                loop {
                    let t = x.round() as u64;
                    if t > steps {
                        break;
                    }
                    if out.last() != Some(&t) && t >= 1 {
                        out.push(t);
                    }
                    x *= ratio;
                }
            }
        }
        if steps >= 1 && out.last() != Some(&steps) {
            out.push(steps);
        }
        out
    }

    /// `log`, `log:1.2` or a positive integer stride.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.eq_ignore_ascii_case("log") {
            return Ok(RecordSchedule::default());
        }
        if let Some(r) = text.strip_prefix("log:") {
            let r: f64 = r
                .parse()
                .map_err(|_| Error::Config(format!("bad logarithmic ratio `{r}`")))?;
            if !(r > 1.0 && r.is_finite()) {
                return Err(Error::Config(format!(
                    "logarithmic stride ratio must exceed 1, got {r}"
                )));
            }
            return Ok(RecordSchedule::Logarithmic(r));
        }
        match text.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(RecordSchedule::Every(n)),
            _ => Err(Error::Config(format!(
                "stride must be `log`, `log:<ratio>` or a positive integer, got `{text}`"
            ))),
        }
    }
}

impl std::fmt::Display for RecordSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordSchedule::Every(n) => write!(f, "{n}"),
            RecordSchedule::Logarithmic(r) if *r == LOG_RATIO => f.write_str("log"),
            RecordSchedule::Logarithmic(r) => write!(f, "log:{r}"),
        }
    }
}
