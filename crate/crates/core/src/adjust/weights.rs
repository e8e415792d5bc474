use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::balance_stats::check_z;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `Z/ê + (1 − Z)/(1 − ê)`.
    Ate,
    /// `Z + (1 − Z)·ê/(1 − ê)`.
    Att,
    /// `Z(1 − ê) + (1 − Z)ê`.
    Overlap,
    /// `min(ê, 1 − ê) / (Zê + (1 − Z)(1 − ê))`.
    Matching,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 4] = [Self::Ate, Self::Att, Self::Overlap, Self::Matching];

    pub fn weight(self, e: f64, treated: bool) -> f64 {
        match (self, treated) {
            (Self::Ate, true) => 1.0 / e,
            (Self::Ate, false) => 1.0 / (1.0 - e),
            (Self::Att, true) => 1.0,
            (Self::Att, false) => e / (1.0 - e),
            (Self::Overlap, true) => 1.0 - e,
            (Self::Overlap, false) => e,
            (Self::Matching, true) => e.min(1.0 - e) / e,
            (Self::Matching, false) => e.min(1.0 - e) / (1.0 - e),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ate => "ate",
            Self::Att => "att",
            Self::Overlap => "overlap",
            Self::Matching => "mw",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightScheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ate" => Ok(Self::Ate),
            "att" => Ok(Self::Att),
            "overlap" => Ok(Self::Overlap),
            "mw" | "matching" => Ok(Self::Matching),
            _ => Err(invalid(format!("unknown weighting scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub weights: Vec<f64>,
    pub scheme: WeightScheme,
}

pub fn compute_weights(ps: &[f64], z: &[f64], scheme: WeightScheme) -> Result<WeightVector> {
    check_z(z, ps.len())?;
    if let Some(i) = ps.iter().position(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(invalid(format!("propensity {i} = {} is not inside (0, 1)", ps[i])));
    }
    Ok(WeightVector {
        weights: ps
            .iter()
            .zip(z)
            .map(|(&e, &zi)| scheme.weight(e, zi == 1.0))
            .collect(),
        scheme,
    })
}
