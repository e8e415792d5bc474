//! CSV/JSON artifacts exchanged between subcommands, each with a loader.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// One line of `scores.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    /// 0-based cohort row.
    pub row: usize,
    pub treatment: f64,
    pub ps: f64,
    /// 1 if the row was in the training subsample.
    pub in_sample: u8,
}

/// One line of `matches.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub treated: usize,
    pub control: usize,
    pub ps_treated: f64,
    pub ps_control: f64,
    pub distance: f64,
}

/// One line of `weights.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub row: usize,
    pub treatment: f64,
    pub ps: f64,
    pub weight: f64,
}

/// One line of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    /// `unadjusted` or `adjusted`.
    pub analysis: String,
    pub group: u8,
    pub time: f64,
    pub survival: f64,
    pub at_risk: f64,
    pub events: f64,
}

/// One line of `roc.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRecord {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T], header: &[&str]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    // Written by hand so an empty file still carries its header.
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, rec)| rec.with_context(|| format!("{}: data row {}", path.display(), i + 1)))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub const SCORE_HEADER: [&str; 4] = ["row", "treatment", "ps", "in_sample"];
pub const MATCH_HEADER: [&str; 5] = ["treated", "control", "ps_treated", "ps_control", "distance"];
pub const WEIGHT_HEADER: [&str; 4] = ["row", "treatment", "ps", "weight"];
pub const CURVE_HEADER: [&str; 6] = ["analysis", "group", "time", "survival", "at_risk", "events"];
pub const ROC_HEADER: [&str; 3] = ["threshold", "fpr", "tpr"];

/// Reads `scores.csv` and checks that it covers rows `0..n` in order.
pub fn read_scores(path: &Path, n: usize) -> Result<Vec<ScoreRecord>> {
    let scores: Vec<ScoreRecord> = read_csv(path)?;
    if scores.len() != n || scores.iter().enumerate().any(|(i, s)| s.row != i) {
        bail!("{}: expected one score per cohort row (0..{n})", path.display());
    }
    Ok(scores)
}

/// The adjustment artifact consumed by `survival`.
#[derive(Debug, Clone, PartialEq)]
pub enum AdjustmentFile {
    Matches(Vec<MatchRecord>),
    Weights(Vec<WeightRecord>),
}

/// Reads `matches.csv` or `weights.csv`, telling them apart by header.
pub fn read_adjustment(path: &Path) -> Result<AdjustmentFile> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header == MATCH_HEADER {
        Ok(AdjustmentFile::Matches(read_csv(path)?))
    } else if header == WEIGHT_HEADER {
        Ok(AdjustmentFile::Weights(read_csv(path)?))
    } else {
        bail!("{}: header {header:?} is neither a match nor a weight file", path.display())
    }
}
