use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{validate, SurvivalSample};
use crate::error::{invalid, Error, Result};
use crate::stats::{chi_square_sf, normal_two_sided_p};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ties {
    Efron,
    Breslow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxConfig {
    pub ties: Ties,
    pub max_iter: usize,
    /// Convergence threshold on the Newton decrement `UᵀI⁻¹U`, which does
    /// not depend on covariate units.
    pub tol: f64,
}

impl Default for CoxConfig {
    fn default() -> Self {
        Self {
            ties: Ties::Efron,
            max_iter: 50,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTest {
    pub statistic: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxModel {
    pub coefficients: Vec<f64>,
    pub hazard_ratios: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z: Vec<f64>,
    pub p_values: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub concordance: f64,
    /// Global score test of `β = 0`.
    pub score_test: ScoreTest,
    pub log_likelihood: f64,
    pub score_max_norm: f64,
    pub iterations: usize,
    /// The partial likelihood kept increasing towards infinite coefficients.
    pub monotone_likelihood: bool,
}

/// One row of a Cox summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxTerm {
    pub name: String,
    pub coef: f64,
    #[serde(rename = "HR")]
    pub hr: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    #[serde(rename = "CI_low")]
    pub ci_low: f64,
    #[serde(rename = "CI_high")]
    pub ci_high: f64,
}

impl CoxModel {
    pub fn terms(&self, names: &[String]) -> Vec<CoxTerm> {
        (0..self.coefficients.len())
            .map(|j| CoxTerm {
                name: names.get(j).cloned().unwrap_or_else(|| format!("x{j}")),
                coef: self.coefficients[j],
                hr: self.hazard_ratios[j],
                se: self.standard_errors[j],
                z: self.z[j],
                p: self.p_values[j],
                ci_low: self.ci_low[j],
                ci_high: self.ci_high[j],
            })
            .collect()
    }
}

struct Derivatives {
    loglik: f64,
    score: DVector<f64>,
    /// Observed information, `−∂²ℓ/∂β²`.
    info: DMatrix<f64>,
}

/// Weighted partial likelihood and its first two derivatives.
///
/// For `m` tied deaths with total weight `d_w`, Efron's approximation
/// subtracts `k/m` of the deaths' own risk mass in the `k`-th of `m`
/// denominators, each carrying weight `d_w/m`. Breslow uses the full risk
/// set every time; with `m = 1` the two coincide.
fn derivatives(x: &[Vec<f64>], samples: &[SurvivalSample], order: &[usize], beta: &DVector<f64>, ties: Ties) -> Derivatives {
    let p = beta.len();
    let mut loglik = 0.0;
    let mut score = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(p);
    let mut s2 = DMatrix::zeros(p, p);
    let mut k = 0;
    // `order` is descending in time, so risk sets only grow.
    while k < order.len() {
        let t = samples[order[k]].time;
        let mut d0 = 0.0;
        let mut d1 = DVector::zeros(p);
        let mut d2 = DMatrix::zeros(p, p);
        let (mut dw, mut m) = (0.0, 0usize);
        while k < order.len() && samples[order[k]].time == t {
            let i = order[k];
            let s = &samples[i];
            let xi = DVector::from_column_slice(&x[i]);
            let eta = beta.dot(&xi);
            let wr = s.weight * eta.exp();
            let xx = &xi * xi.transpose();
            s0 += wr;
            s1.axpy(wr, &xi, 1.0);
            s2 += &xx * wr;
            if s.event {
                d0 += wr;
                d1.axpy(wr, &xi, 1.0);
                d2 += &xx * wr;
                dw += s.weight;
                m += 1;
                loglik += s.weight * eta;
                score.axpy(s.weight, &xi, 1.0);
            }
            k += 1;
        }
        for r in 0..m {
            let f = match ties {
                Ties::Efron => r as f64 / m as f64,
                Ties::Breslow => 0.0,
            };
            let den = s0 - f * d0;
            let a1 = &s1 - &d1 * f;
            let a2 = &s2 - &d2 * f;
            let c = dw / m as f64;
            loglik -= c * den.ln();
            score.axpy(-c / den, &a1, 1.0);
            info += (a2 / den - &a1 * a1.transpose() / (den * den)) * c;
        }
    }
    Derivatives { loglik, score, info }
}

fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|c| c.solve(b))
}

/// Cox proportional hazards by Newton-Raphson on the weighted partial
/// likelihood. Covariates come from `samples[i].covariates`.
pub fn fit_cox(samples: &[SurvivalSample], config: &CoxConfig) -> Result<CoxModel> {
    validate(samples)?;
    let p = samples[0].covariates.len();
    if p == 0 {
        return Err(invalid("Cox model needs at least one covariate"));
    }
    if !samples.iter().any(|s| s.event) {
        return Err(Error::Degenerate("Cox model needs at least one event".into()));
    }
    // Centering leaves β unchanged and keeps exp(η) in range.
    let wsum: f64 = samples.iter().map(|s| s.weight).sum();
    let mut centers = vec![0.0; p];
    let mut scales = vec![0.0; p];
    for j in 0..p {
        let m = samples.iter().map(|s| s.weight * s.covariates[j]).sum::<f64>() / wsum;
        let v = samples
            .iter()
            .map(|s| s.weight * (s.covariates[j] - m).powi(2))
            .sum::<f64>()
            / wsum;
        if v == 0.0 {
            return Err(Error::Degenerate(format!("covariate {j} is constant")));
        }
        centers[j] = m;
        scales[j] = v.sqrt();
    }
    let x: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.covariates.iter().zip(&centers).map(|(v, c)| v - c).collect())
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].time.total_cmp(&samples[a].time));

    let mut beta = DVector::zeros(p);
    let mut d = derivatives(&x, samples, &order, &beta, config.ties);
    let score_test = {
        let statistic = solve_spd(&d.info, &d.score).map_or(f64::NAN, |s| d.score.dot(&s));
        ScoreTest {
            statistic,
            df: p as f64,
            p: chi_square_sf(statistic, p as f64),
        }
    };
    let mut iterations = 0;
    let mut stalled = false;
    let mut converged = false;
    loop {
        let Some(step) = solve_spd(&d.info, &d.score) else {
            stalled = true;
            break;
        };
        if d.score.dot(&step) < config.tol {
            // One last full step is nearly free and squares the error.
            let next = &beta + &step;
            let nd = derivatives(&x, samples, &order, &next, config.ties);
            if nd.loglik >= d.loglik {
                beta = next;
                d = nd;
            }
            converged = true;
            break;
        }
        if iterations == config.max_iter {
            break;
        }
        iterations += 1;
        let mut t = 1.0;
        let mut next = &beta + &step;
        let mut nd = derivatives(&x, samples, &order, &next, config.ties);
        while !(nd.loglik >= d.loglik) && t > 1e-10 {
            t *= 0.5;
            next = &beta + &step * t;
            nd = derivatives(&x, samples, &order, &next, config.ties);
        }
        if !(nd.loglik >= d.loglik) {
            stalled = true;
            break;
        }
        beta = next;
        d = nd;
    }
    // A standardized effect this large means the likelihood is still
    // climbing towards an infinite coefficient.
    let monotone = beta.iter().zip(&scales).any(|(b, s)| (b * s).abs() > 15.0);
    let score_max_norm = d.score.amax();
    if !converged && !monotone && !stalled {
        return Err(Error::NonConvergence("Cox Newton-Raphson", iterations));
    }
    let cov = d.info.clone().cholesky().map(|c| c.inverse());
    let se: Vec<f64> = (0..p)
        .map(|j| cov.as_ref().map_or(f64::NAN, |c| c[(j, j)].sqrt()))
        .collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let z: Vec<f64> = coefficients.iter().zip(&se).map(|(b, s)| b / s).collect();
    let risk: Vec<f64> = samples
        .iter()
        .map(|s| s.covariates.iter().zip(&coefficients).map(|(v, b)| v * b).sum())
        .collect();
    Ok(CoxModel {
        hazard_ratios: coefficients.iter().map(|b| b.exp()).collect(),
        ci_low: coefficients.iter().zip(&se).map(|(b, s)| (b - 1.96 * s).exp()).collect(),
        ci_high: coefficients.iter().zip(&se).map(|(b, s)| (b + 1.96 * s).exp()).collect(),
        p_values: z.iter().map(|&z| normal_two_sided_p(z)).collect(),
        concordance: concordance(&risk, samples)?,
        coefficients,
        standard_errors: se,
        z,
        score_test,
        log_likelihood: d.loglik,
        score_max_norm,
        iterations,
        monotone_likelihood: monotone,
    })
}

/// Harrell's C: over pairs where the earlier time is an observed death,
/// the weighted share in which that subject has the higher risk score
/// (score ties count ½). Pair weight is the product of sample weights.
pub fn concordance(risk: &[f64], samples: &[SurvivalSample]) -> Result<f64> {
    if risk.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            context: "risk scores",
            expected: samples.len(),
            got: risk.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (i, si) in samples.iter().enumerate() {
        if !si.event {
            continue;
        }
        for (j, sj) in samples.iter().enumerate() {
            if sj.time <= si.time {
                continue;
            }
            let w = si.weight * sj.weight;
            den += w;
            if risk[i] > risk[j] {
                num += w;
            } else if risk[i] == risk[j] {
                num += 0.5 * w;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::Degenerate("no usable pairs for concordance".into()));
    }
    Ok(num / den)
}
