use serde::{Deserialize, Serialize};

use super::{time_order, validate, SurvivalSample};
use crate::error::{Error, Result};
use crate::stats::chi_square_sf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRankResult {
    /// `Σ (d₁ − Y₁·d/Y)` for group 1.
    pub observed_minus_expected: f64,
    pub variance: f64,
    pub statistic: f64,
    pub p: f64,
}

/// Two-group (weighted) log-rank test, chi-square with one degree of
/// freedom.
///
/// At each event time with at-risk weights `Y₀, Y₁` (`Y = Y₀ + Y₁`) and
/// death weight `d`, the score adds `d₁ − Y₁·d/Y`. The variance adds
/// `π(1 − π) · Σ_deaths w² · (n − m)/(n − 1)` with `π = Y₁/Y`, `n` the
/// number of subjects at risk and `m` the number of deaths; with unit
/// weights this is the hypergeometric variance `Y₀Y₁d(Y − d)/(Y²(Y − 1))`.
pub fn log_rank(samples: &[SurvivalSample]) -> Result<LogRankResult> {
    validate(samples)?;
    if !samples.iter().any(|s| s.group == 1) || !samples.iter().any(|s| s.group == 0) {
        return Err(Error::Degenerate("log-rank needs both groups".into()));
    }
    if !samples.iter().any(|s| s.event) {
        return Err(Error::Degenerate("log-rank needs at least one event".into()));
    }
    let order = time_order(samples);
    // Per-group risk-set weights as suffix sums over the time order, so a
    // depleted group is exactly zero.
    let mut suffix = vec![[0.0f64; 2]; order.len() + 1];
    for k in (0..order.len()).rev() {
        let s = &samples[order[k]];
        suffix[k] = suffix[k + 1];
        suffix[k][s.group as usize] += s.weight;
    }
    let (mut u, mut v) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let t = samples[order[k]].time;
        let (mut d, mut d1, mut w2, mut m) = (0.0, 0.0, 0.0, 0usize);
        let y = suffix[k];
        let n_raw = order.len() - k;
        while k < order.len() && samples[order[k]].time == t {
            let s = &samples[order[k]];
            if s.event {
                d += s.weight;
                w2 += s.weight * s.weight;
                m += 1;
                if s.group == 1 {
                    d1 += s.weight;
                }
            }
            k += 1;
        }
        if m > 0 {
            let total = y[0] + y[1];
            let pi = y[1] / total;
            u += d1 - pi * d;
            if n_raw > 1 {
                v += pi * (1.0 - pi) * w2 * (n_raw - m) as f64 / (n_raw - 1) as f64;
            }
        }
    }
    let statistic = if v > 0.0 {
        u * u / v
    } else if u == 0.0 {
        0.0
    } else {
        return Err(Error::Degenerate("log-rank variance is zero".into()));
    };
    Ok(LogRankResult {
        observed_minus_expected: u,
        variance: v,
        statistic,
        p: chi_square_sf(statistic, 1.0),
    })
}
