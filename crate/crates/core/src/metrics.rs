//! Propensity-model diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One ROC vertex. `threshold` is the score at or above which a subject is
/// called positive; the first vertex uses `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

fn check_labels(labels: &[f64], n: usize) -> Result<(usize, usize)> {
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: n,
            got: labels.len(),
        });
    }
    if n == 0 {
        return Err(invalid("no observations"));
    }
    let mut pos = 0;
    for (i, &y) in labels.iter().enumerate() {
        if y == 1.0 {
            pos += 1;
        } else if y != 0.0 {
            return Err(invalid(format!("label {i} is {y}, expected 0 or 1")));
        }
    }
    Ok((pos, n - pos))
}

/// ROC curve and its trapezoidal area. Tied scores form a single threshold,
/// which gives tied positive/negative pairs half credit.
pub fn roc_and_auc(scores: &[f64], labels: &[f64]) -> Result<(RocCurve, f64)> {
    let (pos, neg) = check_labels(labels, scores.len())?;
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate("ROC needs both classes".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid("score is NaN"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let p = RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        };
        auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
        points.push(p);
    }
    Ok((RocCurve { points }, auc))
}

pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    Ok(roc_and_auc(scores, labels)?.1)
}

/// Mean binary cross-entropy. Probabilities must lie strictly inside (0, 1).
pub fn log_loss(probs: &[f64], labels: &[f64]) -> Result<f64> {
    check_labels(labels, probs.len())?;
    let mut total = 0.0;
    for (i, (&p, &y)) in probs.iter().zip(labels).enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("probability {i} = {p} is not inside (0, 1)")));
        }
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total / probs.len() as f64)
}

pub fn brier(probs: &[f64], labels: &[f64]) -> Result<f64> {
    check_labels(labels, probs.len())?;
    if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(invalid(format!("probability {i} = {} outside [0, 1]", probs[i])));
    }
    Ok(probs
        .iter()
        .zip(labels)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / probs.len() as f64)
}

/// Fraction classified correctly, with `p >= threshold` called positive.
pub fn accuracy(probs: &[f64], labels: &[f64], threshold: f64) -> Result<f64> {
    check_labels(labels, probs.len())?;
    let hits = probs
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= threshold) == (y == 1.0))
        .count();
    Ok(hits as f64 / probs.len() as f64)
}

/// The four diagnostics reported per model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub auc: f64,
    pub log_loss: f64,
    pub brier: f64,
    pub accuracy: f64,
}

pub fn evaluate(probs: &[f64], labels: &[f64]) -> Result<ModelMetrics> {
    Ok(ModelMetrics {
        auc: auc(probs, labels)?,
        log_loss: log_loss(probs, labels)?,
        brier: brier(probs, labels)?,
        accuracy: accuracy(probs, labels, 0.5)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[1.0, 0.0, 0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(
            auc(&[0.1, 0.4, 0.35, 0.8], &[0.0, 0.0, 1.0, 1.0]).unwrap(),
            0.75
        );
        assert!(matches!(
            auc(&[0.1, 0.2], &[1.0, 1.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn roc_endpoints() {
        let (roc, _) = roc_and_auc(&[0.3, 0.3, 0.9, 0.1], &[1.0, 0.0, 1.0, 0.0]).unwrap();
        let first = roc.points[0];
        let last = *roc.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert_eq!(roc.points.len(), 4);
    }

    #[test]
    fn log_loss_examples() {
        assert!((log_loss(&[0.5; 4], &[0.0, 1.0, 1.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((log_loss(&[0.25], &[1.0]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(log_loss(&[0.999, 0.001], &[1.0, 0.0]).unwrap() < 0.01);
        assert!(log_loss(&[1.0], &[1.0]).is_err());
        assert!(log_loss(&[0.0], &[0.0]).is_err());
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(brier(&[0.5; 3], &[1.0, 0.0, 1.0]).unwrap(), 0.25);
        assert_eq!(brier(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0.9, 0.1], &[1.0, 0.0], 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.5; 4], &[1.0, 0.0, 0.0, 1.0], 0.5).unwrap(), 0.5);
        assert_eq!(accuracy(&[0.6, 0.4], &[0.0, 1.0], 0.5).unwrap(), 0.0);
    }
}
