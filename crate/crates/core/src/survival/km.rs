use serde::{Deserialize, Serialize};

use super::{time_order, validate, SurvivalSample};
use crate::error::Result;

/// Product-limit estimate as a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    /// Distinct event times, ascending.
    pub times: Vec<f64>,
    /// Survival just after each time.
    pub survival: Vec<f64>,
    /// (Weighted) number at risk just before each time.
    pub at_risk: Vec<f64>,
    /// (Weighted) number of deaths at each time.
    pub events: Vec<f64>,
}

impl SurvivalCurve {
    /// `Ŝ(t)`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.survival[k - 1]
        }
    }
}

fn product_limit(samples: &[SurvivalSample], weight: impl Fn(&SurvivalSample) -> f64) -> SurvivalCurve {
    let order = time_order(samples);
    // Risk sets as suffix sums, so the last risk set equals its own deaths
    // exactly instead of carrying subtraction error.
    let mut suffix = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix[k] = suffix[k + 1] + weight(&samples[order[k]]);
    }
    let mut curve = SurvivalCurve {
        times: vec![],
        survival: vec![],
        at_risk: vec![],
        events: vec![],
    };
    let mut s = 1.0;
    let mut k = 0;
    while k < order.len() {
        let t = samples[order[k]].time;
        let at_risk = suffix[k];
        let mut deaths = 0.0;
        while k < order.len() && samples[order[k]].time == t {
            let smp = &samples[order[k]];
            let w = weight(smp);
            if smp.event {
                deaths += w;
            }
            k += 1;
        }
        if deaths > 0.0 {
            s *= (1.0 - deaths / at_risk).max(0.0);
            curve.times.push(t);
            curve.survival.push(s);
            curve.at_risk.push(at_risk);
            curve.events.push(deaths);
        }
    }
    curve
}

/// Weighted Kaplan-Meier: deaths and risk sets are sums of sample weights.
/// The risk set at `t` holds every subject with follow-up `>= t`.
pub fn kaplan_meier(samples: &[SurvivalSample]) -> Result<SurvivalCurve> {
    validate(samples)?;
    Ok(product_limit(samples, |s| s.weight))
}

/// Kaplan-Meier ignoring sample weights.
pub fn kaplan_meier_unweighted(samples: &[SurvivalSample]) -> Result<SurvivalCurve> {
    validate(samples)?;
    Ok(product_limit(samples, |_| 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: f64, e: bool) -> SurvivalSample {
        SurvivalSample::new(t, e, 0)
    }

    #[test]
    fn hand_fixture() {
        let c = kaplan_meier(&[s(1.0, true), s(2.0, false), s(3.0, true)]).unwrap();
        assert_eq!(c.times, vec![1.0, 3.0]);
        assert_eq!(c.survival, vec![1.0 - 1.0 / 3.0, 0.0]);
        assert!((c.at(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.at(0.5), 1.0);
    }

    #[test]
    fn all_censored() {
        let c = kaplan_meier(&[s(1.0, false), s(4.0, false)]).unwrap();
        assert!(c.times.is_empty());
        assert_eq!(c.at(10.0), 1.0);
        assert!(kaplan_meier(&[]).is_err());
    }

    #[test]
    fn weights_scale_counts() {
        let data = [s(1.0, true).with_weight(2.0), s(2.0, true), s(2.0, false).with_weight(3.0)];
        let c = kaplan_meier(&data).unwrap();
        assert_eq!(c.at_risk, vec![6.0, 4.0]);
        assert!((c.survival[1] - (4.0 / 6.0) * 0.75).abs() < 1e-15);
    }
}
