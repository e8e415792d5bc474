use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid};
use crate::error::{Error, Result};

/// Coefficients above this magnitude are taken as a sign of separation.
const SEPARATION_BOUND: f64 = 30.0;
const RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Intercept first, then one slope per feature.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the unpenalized fit diverged and the ridge refit was used.
    pub separated: bool,
}

/// Maximum-likelihood logistic regression by Newton-Raphson (IRLS).
///
/// Converged when every component of the score is below `tol` in absolute
/// value. If a coefficient leaves `[-30, 30]` the fit is redone with a
/// `1e-6` ridge penalty, flagged, and the coefficient vector is scaled down
/// until it fits that range (keeping the fitted decision boundary).
pub fn fit_logistic(rows: &[Vec<f64>], y: &[f64], max_iter: usize, tol: f64) -> Result<LogisticModel> {
    let p = check_training_data(rows, y)?;
    let n = rows.len();
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { rows[i][j - 1] });
    let y = DVector::from_column_slice(y);

    match newton(&x, &y, 0.0, max_iter, tol) {
        Some(fit) if fit.beta.amax() <= SEPARATION_BOUND => Ok(LogisticModel {
            coefficients: fit.beta.iter().copied().collect(),
            converged: fit.converged,
            iterations: fit.iterations,
            separated: false,
        }),
        _ => {
            let fit = newton(&x, &y, RIDGE, max_iter, tol)
                .ok_or_else(|| Error::Numerical("ridge logistic Hessian is singular".into()))?;
            let scale = (SEPARATION_BOUND / fit.beta.amax()).min(1.0);
            Ok(LogisticModel {
                coefficients: fit
                    .beta
                    .iter()
                    .map(|b| (b * scale).clamp(-SEPARATION_BOUND, SEPARATION_BOUND))
                    .collect(),
                converged: fit.converged,
                iterations: fit.iterations,
                separated: true,
            })
        }
    }
}

struct NewtonFit {
    beta: DVector<f64>,
    converged: bool,
    iterations: usize,
}

fn penalized_nll(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, ridge: f64) -> f64 {
    let eta = x * beta;
    let nll: f64 = eta
        .iter()
        .zip(y.iter())
        .map(|(&t, &yi)| {
            // log(1 + e^t) − y·t, stable for large |t|.
            let softplus = if t > 0.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
            softplus - yi * t
        })
        .sum();
    nll + 0.5 * ridge * beta.rows(1, beta.len() - 1).norm_squared()
}

/// Returns `None` when the Hessian cannot be factored or the iterate
/// diverges past the separation bound.
fn newton(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64, max_iter: usize, tol: f64) -> Option<NewtonFit> {
    let k = x.ncols();
    let mut beta = DVector::zeros(k);
    let mut penalty = DVector::from_element(k, ridge);
    penalty[0] = 0.0;
    for it in 0..=max_iter {
        let prob = (x * &beta).map(sigmoid);
        let score = x.transpose() * (y - &prob) - penalty.component_mul(&beta);
        if score.amax() < tol {
            return Some(NewtonFit {
                beta,
                converged: true,
                iterations: it,
            });
        }
        if it == max_iter {
            break;
        }
        let w = prob.map(|p| p * (1.0 - p));
        let mut h = x.transpose() * DMatrix::from_fn(x.nrows(), k, |i, j| w[i] * x[(i, j)]);
        for j in 0..k {
            h[(j, j)] += penalty[j];
        }
        let step = h.cholesky()?.solve(&score);
        // Step halving keeps the likelihood from increasing when the
        // quadratic model overshoots.
        // Increases within rounding of the current value are accepted, or
        // the iteration stalls next to the optimum.
        let current = penalized_nll(x, y, &beta, ridge);
        let slack = 1e-12 * (1.0 + current.abs());
        let mut t = 1.0;
        let mut next = &beta + &step * t;
        while penalized_nll(x, y, &next, ridge) > current + slack && t > 1e-8 {
            t *= 0.5;
            next = &beta + &step * t;
        }
        beta = next;
        if ridge == 0.0 && beta.amax() > SEPARATION_BOUND {
            return None;
        }
    }
    Some(NewtonFit {
        beta,
        converged: false,
        iterations: max_iter,
    })
}

/// Inverse logit of the linear predictor.
pub fn predict_logistic(model: &LogisticModel, x: &[f64]) -> Result<f64> {
    let k = model.coefficients.len();
    if x.len() + 1 != k {
        return Err(Error::DimensionMismatch {
            context: "logistic input",
            expected: k - 1,
            got: x.len(),
        });
    }
    let eta = model.coefficients[0]
        + model.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
    Ok(sigmoid(eta))
}
