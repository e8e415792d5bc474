//! Run configuration: defaults, command-line flags, then a `key=value`
//! file, each layer overriding the previous one.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[value(name = "qnn_exact")]
    QnnExact,
    #[value(name = "qnn_sam")]
    QnnSam,
    #[value(name = "qnn_f_backend")]
    QnnFBackend,
    #[value(name = "lr")]
    Lr,
    #[value(name = "gbm")]
    Gbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Sample {
    #[value(name = "100")]
    #[serde(rename = "100")]
    N100,
    #[value(name = "500")]
    #[serde(rename = "500")]
    N500,
    #[value(name = "full")]
    #[serde(rename = "full")]
    Full,
}

impl Sample {
    pub fn size(self) -> Option<usize> {
        match self {
            Self::N100 => Some(100),
            Self::N500 => Some(500),
            Self::Full => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMethod {
    Nn,
    Optimal,
    Genetic100,
    Genetic400,
    Ate,
    Att,
    Overlap,
    Mw,
}

impl AdjustMethod {
    pub fn is_matching(self) -> bool {
        matches!(self, Self::Nn | Self::Optimal | Self::Genetic100 | Self::Genetic400)
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn parse_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T> {
    T::from_str(s, false).map_err(|_| {
        let allowed: Vec<String> = T::value_variants().iter().map(value_name).collect();
        anyhow!("{key}: `{s}` is not one of {}", allowed.join(", "))
    })
}

macro_rules! display_via_value_enum {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&value_name(self))
            }
        }
    )*};
}
display_via_value_enum!(Model, Sample, AdjustMethod);

/// Every tunable of a run. The field order is the canonical serialization
/// order used for the manifest hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub n: usize,
    pub model: Model,
    pub sample: Sample,
    pub adjust: AdjustMethod,
    /// Empty means every covariate of the cohort.
    pub features: Vec<String>,
    pub shots: u64,
    pub noise_p: f64,
    pub readout_p: f64,
    pub alpha: f64,
    pub clip_epsilon: f64,
    pub layers: usize,
    pub variational: bool,
    /// `half_pi` or `pi`.
    pub encoding: String,
    pub max_evaluations: usize,
    pub sigma0: f64,
    pub gbm_trees: usize,
    pub gbm_depth: usize,
    pub gbm_learning_rate: f64,
    /// Caliper in standard deviations of ê; `None` disables it.
    pub caliper_sd: Option<f64>,
    pub genetic_generations: usize,
    /// `efron` or `breslow`.
    pub ties: String,
    pub stage_effect: f64,
    pub sex_effect: f64,
    pub treatment_log_hr: f64,
    pub censoring_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = qpsa::data::SynthConfig::default();
        Self {
            seed: 0,
            n: synth.n,
            model: Model::QnnExact,
            sample: Sample::Full,
            adjust: AdjustMethod::Mw,
            features: Vec::new(),
            shots: 1024,
            noise_p: 0.01,
            readout_p: 0.02,
            alpha: 1e-3,
            clip_epsilon: 1e-3,
            layers: 1,
            variational: false,
            encoding: "half_pi".into(),
            max_evaluations: 3000,
            sigma0: 0.15,
            gbm_trees: 100,
            gbm_depth: 3,
            gbm_learning_rate: 0.1,
            caliper_sd: Some(0.25),
            genetic_generations: 30,
            ties: "efron".into(),
            stage_effect: synth.stage_effect,
            sex_effect: synth.sex_effect,
            treatment_log_hr: synth.treatment_log_hr,
            censoring_rate: synth.censoring_rate,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("{key}: cannot parse `{v}`"))
}

impl RunConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "model" => self.model = parse_enum(key, v)?,
            "sample" => self.sample = parse_enum(key, v)?,
            "adjust" => self.adjust = parse_enum(key, v)?,
            "features" => {
                self.features = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
            }
            "shots" => self.shots = num(key, v)?,
            "noise_p" | "noise-p" => self.noise_p = num(key, v)?,
            "readout_p" => self.readout_p = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "clip_epsilon" => self.clip_epsilon = num(key, v)?,
            "layers" => self.layers = num(key, v)?,
            "variational" => self.variational = num(key, v)?,
            "encoding" => self.encoding = v.to_string(),
            "max_evaluations" => self.max_evaluations = num(key, v)?,
            "sigma0" => self.sigma0 = num(key, v)?,
            "gbm_trees" => self.gbm_trees = num(key, v)?,
            "gbm_depth" => self.gbm_depth = num(key, v)?,
            "gbm_learning_rate" => self.gbm_learning_rate = num(key, v)?,
            "caliper_sd" | "caliper" => {
                self.caliper_sd = if v == "none" { None } else { Some(num(key, v)?) }
            }
            "genetic_generations" => self.genetic_generations = num(key, v)?,
            "ties" => self.ties = v.to_string(),
            "stage_effect" => self.stage_effect = num(key, v)?,
            "sex_effect" => self.sex_effect = num(key, v)?,
            "treatment_log_hr" => self.treatment_log_hr = num(key, v)?,
            "censoring_rate" => self.censoring_rate = num(key, v)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    /// Applies a `key=value` file. Blank lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", i + 1))?;
            self.set(k.trim(), v.trim()).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        self.apply_text(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.encoding.as_str(), "half_pi" | "pi") {
            bail!("encoding must be `half_pi` or `pi`, got `{}`", self.encoding);
        }
        if !matches!(self.ties.as_str(), "efron" | "breslow") {
            bail!("ties must be `efron` or `breslow`, got `{}`", self.ties);
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 0.5) {
            bail!("clip_epsilon must lie in (0, 0.5)");
        }
        if self.alpha < 0.0 {
            bail!("alpha must be nonnegative");
        }
        if self.shots == 0 {
            bail!("shots must be at least 1");
        }
        Ok(())
    }

    /// Canonical JSON, the input of [`RunConfig::hash`].
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
