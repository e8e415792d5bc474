use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use crate::error::{invalid, Error, Result};

/// Target interval of the min-max angle encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncodingMethod {
    /// `[0, π]`.
    MinMaxPi,
    /// `[0, π/2]`. Under the `exp(i·x·Z)` phase the Bloch vector turns by
    /// `2x`, so this is the widest range on which distinct values stay
    /// distinct after encoding.
    MinMaxHalfPi,
}

impl EncodingMethod {
    pub fn upper(self) -> f64 {
        match self {
            Self::MinMaxPi => PI,
            Self::MinMaxHalfPi => FRAC_PI_2,
        }
    }
}

/// Stored min-max constants, reusable on held-out rows. Values outside the
/// fitted range are clamped to the ends of the interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub features: Vec<String>,
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub method: EncodingMethod,
}

impl FeatureEncoder {
    pub fn fit(cohort: &Cohort, features: &[&str], method: EncodingMethod) -> Result<Self> {
        if features.is_empty() {
            return Err(invalid("no features to encode"));
        }
        if cohort.is_empty() {
            return Err(invalid("cannot fit an encoder on an empty cohort"));
        }
        let mut mins = Vec::with_capacity(features.len());
        let mut maxs = Vec::with_capacity(features.len());
        for f in features {
            let col = cohort.column(f)?;
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                return Err(Error::Degenerate(format!("feature `{f}` is constant ({lo})")));
            }
            mins.push(lo);
            maxs.push(hi);
        }
        Ok(Self {
            features: features.iter().map(|s| s.to_string()).collect(),
            mins,
            maxs,
            method,
        })
    }

    pub fn encode_row(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.features.len() {
            return Err(Error::DimensionMismatch {
                context: "feature row",
                expected: self.features.len(),
                got: values.len(),
            });
        }
        let top = self.method.upper();
        Ok(values
            .iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(v, (lo, hi))| top * ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect())
    }

    pub fn transform(&self, cohort: &Cohort) -> Result<Vec<Vec<f64>>> {
        let idx: Vec<usize> = self
            .features
            .iter()
            .map(|f| cohort.column_index(f))
            .collect::<Result<_>>()?;
        cohort
            .rows()
            .iter()
            .map(|r| self.encode_row(&idx.iter().map(|&j| r[j]).collect::<Vec<_>>()))
            .collect()
    }
}

/// Min-max angle encoding of the named columns. Returns the matrix and the
/// fitted constants.
pub fn encode_features(
    cohort: &Cohort,
    features: &[&str],
    method: EncodingMethod,
) -> Result<(Vec<Vec<f64>>, FeatureEncoder)> {
    let enc = FeatureEncoder::fit(cohort, features, method)?;
    Ok((enc.transform(cohort)?, enc))
}

/// Raw (unencoded) values of the named columns, one row per subject.
pub fn feature_matrix(cohort: &Cohort, features: &[&str]) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = features
        .iter()
        .map(|f| cohort.column_index(f))
        .collect::<Result<_>>()?;
    Ok(cohort
        .rows()
        .iter()
        .map(|r| idx.iter().map(|&j| r[j]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CohortSchema;

    fn cohort() -> Cohort {
        Cohort::new(
            CohortSchema::colorectal(),
            vec!["Age".into(), "Sex".into(), "Stage".into()],
            vec![
                vec![40.0, 0.0, 1.0],
                vec![60.0, 1.0, 3.0],
                vec![80.0, 1.0, 3.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn examples() {
        let (x, enc) = encode_features(&cohort(), &["Age", "Sex"], EncodingMethod::MinMaxPi).unwrap();
        assert_eq!(x[0], vec![0.0, 0.0]);
        assert_eq!(x[1], vec![PI / 2.0, PI]);
        assert_eq!(x[2], vec![PI, PI]);
        assert_eq!(enc.transform(&cohort()).unwrap(), x);
        let (h, _) = encode_features(&cohort(), &["Age"], EncodingMethod::MinMaxHalfPi).unwrap();
        assert_eq!(h[1], vec![PI / 4.0]);
    }

    #[test]
    fn constant_feature_rejected() {
        let c = cohort().subset(&[1, 2]).unwrap();
        assert!(matches!(
            encode_features(&c, &["Stage"], EncodingMethod::MinMaxPi),
            Err(Error::Degenerate(_))
        ));
    }
}
