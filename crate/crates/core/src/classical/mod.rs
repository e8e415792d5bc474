//! Classical propensity baselines.

mod gbm;
mod logistic;

pub use gbm::{fit_gbm, predict_gbm, GbmConfig, GbmModel, Node};
pub use logistic::{fit_logistic, predict_logistic, LogisticModel};

use crate::error::{invalid, Error, Result};

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Checks a row matrix against binary labels; returns the column count.
pub(crate) fn check_training_data(rows: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if rows.len() < 2 {
        return Err(invalid("need at least two rows"));
    }
    if y.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: rows.len(),
            got: y.len(),
        });
    }
    let p = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != p {
            return Err(Error::DimensionMismatch {
                context: "row width",
                expected: p,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("row {i} has a non-finite value")));
        }
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(invalid("labels must be 0 or 1"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::Degenerate("labels contain a single class".into()));
    }
    Ok(p)
}
