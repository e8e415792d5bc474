use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{event_times, validate, SurvivalSample};
use crate::error::{Error, Result};
use crate::stats::{chi_square_sf, normal_two_sided_p};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AalenConfig {
    /// Event times whose at-risk design has a larger condition number are
    /// skipped.
    pub max_condition: f64,
    /// Only event times up to this horizon are used.
    pub horizon: Option<f64>,
}

impl Default for AalenConfig {
    fn default() -> Self {
        Self {
            max_condition: 1e10,
            horizon: None,
        }
    }
}

/// Summary row: the cumulative coefficient at the last used time and the
/// least-squares slope of the cumulative coefficient against time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AalenTerm {
    pub name: String,
    pub slope: f64,
    pub coef: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AalenModel {
    /// Event times at which `B̂` jumps.
    pub times: Vec<f64>,
    /// `B̂(t)` after each used time; intercept first.
    pub cumulative: Vec<Vec<f64>>,
    /// Intercept first.
    pub terms: Vec<AalenTerm>,
    pub chisq: f64,
    pub df: f64,
    pub p: f64,
    pub used_event_times: usize,
    pub total_event_times: usize,
}

fn ols_slope(t: &[f64], y: &[f64]) -> f64 {
    if t.len() < 2 {
        return 0.0;
    }
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Aalen additive hazards regression with an intercept.
///
/// At each event time, `dB̂ = (XᵀWX)⁻¹ XᵀW dN` over the risk set, and the
/// variance accumulates `(XᵀWX)⁻¹ XᵀW diag(dN) WX (XᵀWX)⁻¹`. Event times
/// whose design is ill-conditioned are skipped. Inference is at the last
/// used time; the global test covers the non-intercept coefficients.
pub fn fit_aalen(samples: &[SurvivalSample], names: &[String], config: &AalenConfig) -> Result<AalenModel> {
    validate(samples)?;
    let p = samples[0].covariates.len() + 1;
    let all_times = event_times(samples);
    if all_times.is_empty() {
        return Err(Error::Degenerate("Aalen model needs at least one event".into()));
    }
    let times: Vec<f64> = all_times
        .iter()
        .copied()
        .filter(|&t| config.horizon.is_none_or(|h| t <= h))
        .collect();
    let row = |s: &SurvivalSample| {
        let mut r = Vec::with_capacity(p);
        r.push(1.0);
        r.extend_from_slice(&s.covariates);
        DVector::from_vec(r)
    };

    let mut b = DVector::zeros(p);
    let mut var = DMatrix::zeros(p, p);
    let mut used = Vec::new();
    let mut path = Vec::new();
    for &t in &times {
        let mut a = DMatrix::zeros(p, p);
        let mut rhs = DVector::zeros(p);
        let mut dying = Vec::new();
        for s in samples.iter().filter(|s| s.time >= t) {
            let x = row(s);
            a += &x * x.transpose() * s.weight;
            if s.event && s.time == t {
                rhs.axpy(s.weight, &x, 1.0);
                dying.push(x * s.weight);
            }
        }
        let eig = SymmetricEigen::new(a.clone()).eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        if !(lo > 0.0 && hi / lo <= config.max_condition) {
            continue;
        }
        let lu = a.lu();
        let Some(db) = lu.solve(&rhs) else { continue };
        let Some(inv) = lu.try_inverse() else { continue };
        for wx in &dying {
            let h = &inv * wx;
            var += &h * h.transpose();
        }
        b += db;
        used.push(t);
        path.push(b.iter().copied().collect::<Vec<f64>>());
    }
    if used.is_empty() {
        return Err(Error::Numerical("design is rank-deficient at every event time".into()));
    }

    let mut terms = Vec::with_capacity(p);
    for j in 0..p {
        let series: Vec<f64> = path.iter().map(|r| r[j]).collect();
        let se = var[(j, j)].sqrt();
        let z = b[j] / se;
        terms.push(AalenTerm {
            name: if j == 0 {
                "Intercept".to_string()
            } else {
                names.get(j - 1).cloned().unwrap_or_else(|| format!("x{}", j - 1))
            },
            slope: ols_slope(&used, &series),
            coef: b[j],
            se,
            z,
            p: normal_two_sided_p(z),
        });
    }
    let (chisq, df) = if p > 1 {
        let sub = var.view((1, 1), (p - 1, p - 1)).into_owned();
        let bs = b.rows(1, p - 1).into_owned();
        let stat = sub
            .cholesky()
            .map_or(f64::NAN, |c| bs.dot(&c.solve(&bs)));
        (stat, (p - 1) as f64)
    } else {
        (0.0, 0.0)
    };
    Ok(AalenModel {
        times: used.clone(),
        cumulative: path,
        terms,
        chisq,
        df,
        p: if df > 0.0 { chi_square_sf(chisq, df) } else { 1.0 },
        used_event_times: used.len(),
        total_event_times: all_times.len(),
    })
}
