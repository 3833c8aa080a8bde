//! Per-sample ratio tables and their CSV form.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fingerprint::hash_bytes;
use crate::io::{csv_reader, csv_writer, fmt, read_fingerprint};

/// One `LHS / RHS` measurement. `level` is 0 for the base resolution and 1
/// for the dyadic refinement; `param` is the exponent `p` where the estimate
/// has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub level: u32,
    pub index: usize,
    pub seed: u64,
    pub param: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub rhs_alt: Option<f64>,
    pub ratio_alt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub estimate: String,
    pub ensemble_size: usize,
    pub samples: Vec<NormSample>,
    /// Over level-0 samples.
    pub max_ratio: f64,
    pub max_ratio_alt: Option<f64>,
    /// Over the refined re-runs of the worst samples.
    pub refined_max_ratio: Option<f64>,
    /// `refined_max_ratio / max_ratio - 1`.
    pub growth: Option<f64>,
    pub cap: f64,
    /// Shortest time horizon used by any sample.
    pub t_max: f64,
    /// Fitted log-log slope of the max ratio against `p`.
    pub slope: Option<f64>,
    pub passed: bool,
    pub fingerprint: String,
    pub notes: Vec<String>,
}

/// Largest acceptable relative growth of the max ratio under refinement.
pub const REFINEMENT_GROWTH_LIMIT: f64 = 0.25;

impl NormReport {
    pub fn base_samples(&self) -> impl Iterator<Item = &NormSample> {
        self.samples.iter().filter(|s| s.level == 0)
    }

    /// Key-value summary lines, in a fixed order.
    pub fn summary(&self) -> Vec<(String, String)> {
        let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
        let mut out = vec![
            ("estimate".to_string(), self.estimate.clone()),
            ("ensemble_size".into(), self.ensemble_size.to_string()),
            ("max_ratio".into(), fmt(self.max_ratio)),
            ("max_ratio_alt".into(), opt(self.max_ratio_alt)),
            ("refined_max_ratio".into(), opt(self.refined_max_ratio)),
            ("growth".into(), opt(self.growth)),
            ("cap".into(), fmt(self.cap)),
            ("t_max".into(), fmt(self.t_max)),
            ("slope".into(), opt(self.slope)),
            ("passed".into(), self.passed.to_string()),
            ("fingerprint".into(), self.fingerprint.clone()),
        ];
        for (k, n) in self.notes.iter().enumerate() {
            out.push((format!("note{k}"), n.clone()));
        }
        out
    }

    /// Stable hash of the sample table and summary.
    pub fn summary_hash(&self) -> String {
        let mut text = String::new();
        for s in &self.samples {
            text.push_str(&sample_row(s).join(","));
            text.push('\n');
        }
        for (k, v) in self.summary() {
            text.push_str(&format!("{k},{v}\n"));
        }
        hash_bytes(text.as_bytes())
    }

    /// Writes `samples.csv` and `summary.csv` style files.
    pub fn write(&self, samples_path: &Path, summary_path: &Path) -> Result<()> {
        let mut w = csv_writer(samples_path, &self.fingerprint)?;
        w.write_record(SAMPLE_HEADER)?;
        for s in &self.samples {
            w.write_record(sample_row(s))?;
        }
        w.flush()?;
        let mut w = csv_writer(summary_path, &self.fingerprint)?;
        w.write_record(["key", "value"])?;
        for (k, v) in self.summary() {
            w.write_record([k, v])?;
        }
        w.write_record(["summary_hash".to_string(), self.summary_hash()])?;
        w.flush()?;
        Ok(())
    }
}

const SAMPLE_HEADER: [&str; 9] = ["level", "index", "seed", "param", "lhs", "rhs", "ratio", "rhs_alt", "ratio_alt"];

fn sample_row(s: &NormSample) -> Vec<String> {
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    vec![
        s.level.to_string(),
        s.index.to_string(),
        s.seed.to_string(),
        opt(s.param),
        fmt(s.lhs),
        fmt(s.rhs),
        fmt(s.ratio),
        opt(s.rhs_alt),
        opt(s.ratio_alt),
    ]
}

/// Reads a sample table written by [`NormReport::write`], returning the
/// fingerprint header and the rows.
pub fn read_samples(path: &Path) -> Result<(Option<String>, Vec<NormSample>)> {
    let fp = read_fingerprint(path)?;
    let mut r = csv_reader(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != SAMPLE_HEADER {
        return Err(Error::Format(format!("{} is not a sample table", path.display())));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad number {s:?} in {}", path.display())))
    };
    let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let int = |s: &str| -> Result<u64> {
        s.parse::<u64>()
            .map_err(|_| Error::Format(format!("bad integer {s:?} in {}", path.display())))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(NormSample {
            level: int(&rec[0])? as u32,
            index: int(&rec[1])? as usize,
            seed: int(&rec[2])?,
            param: opt(&rec[3])?,
            lhs: num(&rec[4])?,
            rhs: num(&rec[5])?,
            ratio: num(&rec[6])?,
            rhs_alt: opt(&rec[7])?,
            ratio_alt: opt(&rec[8])?,
        });
    }
    Ok((fp, rows))
}

/// Reads a `key,value` summary file.
pub fn read_summary(path: &Path) -> Result<Vec<(String, String)>> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Format(format!("{} is not a key,value table", path.display())));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// Maximum ratio per distinct `param` value over the level-0 samples, sorted
/// by `param`.
pub fn max_ratio_by_param(samples: &[NormSample]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for s in samples.iter().filter(|s| s.level == 0) {
        let Some(p) = s.param else { continue };
        match out.iter_mut().find(|(q, _)| *q == p) {
            Some(slot) => slot.1 = slot.1.max(s.ratio),
            None => out.push((p, s.ratio)),
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|(x, y)| *x <= 0.0 || *y <= 0.0) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}
