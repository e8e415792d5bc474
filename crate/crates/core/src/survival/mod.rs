//! Time-to-event estimators with optional subject weights.

mod aalen;
mod cox;
mod km;
mod logrank;

pub use aalen::{fit_aalen, AalenConfig, AalenModel, AalenTerm};
pub use cox::{concordance, fit_cox, CoxConfig, CoxModel, CoxTerm, ScoreTest, Ties};
pub use km::{kaplan_meier, kaplan_meier_unweighted, SurvivalCurve};
pub use logrank::{log_rank, LogRankResult};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSample {
    /// Follow-up time, months.
    pub time: f64,
    /// Death observed at `time` (otherwise censored).
    pub event: bool,
    /// Arm: 1 treated, 0 control.
    pub group: u8,
    pub weight: f64,
    pub covariates: Vec<f64>,
}

impl SurvivalSample {
    pub fn new(time: f64, event: bool, group: u8) -> Self {
        Self {
            time,
            event,
            group,
            weight: 1.0,
            covariates: Vec::new(),
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_covariates(mut self, covariates: Vec<f64>) -> Self {
        self.covariates = covariates;
        self
    }
}

pub(crate) fn validate(samples: &[SurvivalSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(invalid("no survival samples"));
    }
    let p = samples[0].covariates.len();
    for (i, s) in samples.iter().enumerate() {
        if !(s.time > 0.0 && s.time.is_finite()) {
            return Err(invalid(format!("sample {i}: time {} is not positive", s.time)));
        }
        if !(s.weight > 0.0 && s.weight.is_finite()) {
            return Err(invalid(format!("sample {i}: weight {} is not positive", s.weight)));
        }
        if s.group > 1 {
            return Err(invalid(format!("sample {i}: group {} is not 0 or 1", s.group)));
        }
        if s.covariates.len() != p || s.covariates.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("sample {i}: covariates malformed")));
        }
    }
    Ok(())
}

/// Sample indices sorted by ascending time (stable).
pub(crate) fn time_order(samples: &[SurvivalSample]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| samples[a].time.total_cmp(&samples[b].time));
    idx
}

/// Distinct event times in ascending order.
pub(crate) fn event_times(samples: &[SurvivalSample]) -> Vec<f64> {
    let mut t: Vec<f64> = samples.iter().filter(|s| s.event).map(|s| s.time).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// One sample per cohort row from the time, event and treatment columns,
/// with optional weights and covariate columns.
pub fn samples_from_cohort(
    cohort: &crate::data::Cohort,
    weights: Option<&[f64]>,
    covariates: &[&str],
) -> Result<Vec<SurvivalSample>> {
    let time = cohort.survival_time()?;
    let event = cohort.event()?;
    let z = cohort.treatment()?;
    if let Some(w) = weights {
        if w.len() != time.len() {
            return Err(crate::Error::DimensionMismatch {
                context: "survival weights",
                expected: time.len(),
                got: w.len(),
            });
        }
    }
    let cols: Vec<Vec<f64>> = covariates
        .iter()
        .map(|c| cohort.column(c))
        .collect::<Result<_>>()?;
    Ok((0..time.len())
        .map(|i| SurvivalSample {
            time: time[i],
            event: event[i] == 1.0,
            group: z[i] as u8,
            weight: weights.map_or(1.0, |w| w[i]),
            covariates: cols.iter().map(|c| c[i]).collect(),
        })
        .collect())
}
