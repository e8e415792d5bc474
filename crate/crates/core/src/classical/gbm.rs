use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid};
use crate::error::{invalid, Error, Result};
use crate::rng::{derived_rng, stream};

/// Regression tree node. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf(_) => None,
            Node::Split {
                feature, left, right, ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub n_trees: usize,
    pub depth: usize,
    pub learning_rate: f64,
    /// Fraction of rows drawn without replacement for each tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub initial_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
    pub n_features: usize,
}

/// Gradient boosting on binomial deviance with least-squares trees fitted to
/// the residuals `y − p`.
pub fn fit_gbm(rows: &[Vec<f64>], y: &[f64], config: &GbmConfig) -> Result<GbmModel> {
    let n_features = check_training_data(rows, y)?;
    if config.n_trees == 0 {
        return Err(invalid("GBM needs at least one tree"));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(invalid("learning rate must be a nonnegative number"));
    }
    if !(config.subsample > 0.0 && config.subsample <= 1.0) {
        return Err(invalid("subsample fraction must lie in (0, 1]"));
    }
    let n = rows.len();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let f0 = (ybar / (1.0 - ybar)).ln();
    let mut score = vec![f0; n];
    let mut trees = Vec::with_capacity(config.n_trees);
    let take = ((config.subsample * n as f64).round() as usize).clamp(1, n);

    for m in 0..config.n_trees {
        let residual: Vec<f64> = score.iter().zip(y).map(|(&f, &yi)| yi - sigmoid(f)).collect();
        let mut idx: Vec<usize> = if take == n {
            (0..n).collect()
        } else {
            let mut rng = derived_rng(config.seed, stream::GBM, m as u64);
            sample(&mut rng, n, take).into_vec()
        };
        idx.sort_unstable();
        let tree = grow(rows, &residual, &mut idx, config.depth, n_features);
        for (s, x) in score.iter_mut().zip(rows) {
            *s += config.learning_rate * tree.evaluate(x);
        }
        trees.push(tree);
    }
    Ok(GbmModel {
        initial_score: f0,
        learning_rate: config.learning_rate,
        trees,
        n_features,
    })
}

fn grow(rows: &[Vec<f64>], r: &[f64], idx: &mut [usize], depth: usize, n_features: usize) -> Node {
    let mean = idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len() as f64;
    if depth == 0 || idx.len() < 2 {
        return Node::Leaf(mean);
    }
    let Some((feature, threshold)) = best_split(rows, r, idx, n_features) else {
        return Node::Leaf(mean);
    };
    let mut left: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][feature] <= threshold).collect();
    let mut right: Vec<usize> = idx.iter().copied().filter(|&i| rows[i][feature] > threshold).collect();
    Node::Split {
        feature,
        threshold,
        left: Box::new(grow(rows, r, &mut left, depth - 1, n_features)),
        right: Box::new(grow(rows, r, &mut right, depth - 1, n_features)),
    }
}

/// Split maximizing the reduction in squared error. Candidates are visited
/// by feature then ascending threshold and only a strict improvement
/// replaces the incumbent, so ties go to the lowest feature and threshold.
fn best_split(rows: &[Vec<f64>], r: &[f64], idx: &[usize], n_features: usize) -> Option<(usize, f64)> {
    let total: f64 = idx.iter().map(|&i| r[i]).sum();
    let n = idx.len() as f64;
    let base = total * total / n;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for f in 0..n_features {
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
        let mut left_sum = 0.0;
        for k in 0..order.len() - 1 {
            left_sum += r[order[k]];
            let (lo, hi) = (rows[order[k]][f], rows[order[k + 1]][f]);
            if lo == hi {
                continue;
            }
            let nl = (k + 1) as f64;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / (n - nl) - base;
            if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, lo + (hi - lo) / 2.0));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Inverse logit of `F₀ + ν·Σ tree(x)`.
pub fn predict_gbm(model: &GbmModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.n_features {
        return Err(Error::DimensionMismatch {
            context: "GBM input",
            expected: model.n_features,
            got: x.len(),
        });
    }
    if let Some(f) = model.trees.iter().filter_map(Node::max_feature).max() {
        if f >= x.len() {
            return Err(invalid(format!("tree splits on feature {f} beyond the input width")));
        }
    }
    let f: f64 = model.trees.iter().map(|t| t.evaluate(x)).sum();
    Ok(sigmoid(model.initial_score + model.learning_rate * f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(feature: usize, threshold: f64, l: f64, r: f64) -> Node {
        Node::Split {
            feature,
            threshold,
            left: Box::new(Node::Leaf(l)),
            right: Box::new(Node::Leaf(r)),
        }
    }

    #[test]
    fn zero_trees_rejected() {
        let rows = vec![vec![0.0], vec![1.0]];
        let cfg = GbmConfig { n_trees: 0, ..GbmConfig::default() };
        assert!(fit_gbm(&rows, &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn single_tree_separates_four_rows() {
        let rows = vec![vec![0.1, 5.0], vec![0.2, 1.0], vec![0.8, 3.0], vec![0.9, 2.0]];
        let y = [0.0, 0.0, 1.0, 1.0];
        let cfg = GbmConfig { n_trees: 1, depth: 2, learning_rate: 1.0, ..GbmConfig::default() };
        let m = fit_gbm(&rows, &y, &cfg).unwrap();
        for (x, &yi) in rows.iter().zip(&y) {
            assert_eq!(predict_gbm(&m, x).unwrap() >= 0.5, yi == 1.0);
        }
        // Lowest-threshold tie break picks the split between 0.2 and 0.8.
        match &m.trees[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 0.5).abs() < 1e-15);
            }
            Node::Leaf(_) => panic!("expected a split"),
        }
    }

    #[test]
    fn zero_learning_rate_predicts_base_rate() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let cfg = GbmConfig { n_trees: 5, learning_rate: 0.0, ..GbmConfig::default() };
        let m = fit_gbm(&rows, &y, &cfg).unwrap();
        for x in &rows {
            assert!((predict_gbm(&m, x).unwrap() - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_built_model() {
        let model = GbmModel {
            initial_score: -0.2,
            learning_rate: 0.5,
            trees: vec![
                stump(0, 0.5, 1.0, -1.0),
                stump(0, 0.1, 0.3, 0.7),
                Node::Split {
                    feature: 0,
                    threshold: 0.3,
                    left: Box::new(stump(0, 0.15, -0.4, 0.25)),
                    right: Box::new(Node::Leaf(2.0)),
                },
            ],
            n_features: 1,
        };
        // x = 0.2: leaves 1.0, 0.7, 0.25.
        let expected = 1.0 / (1.0 + (-(-0.2 + 0.5 * (1.0 + 0.7 + 0.25f64))).exp());
        assert!((predict_gbm(&model, &[0.2]).unwrap() - expected).abs() < 1e-15);

        let empty = GbmModel { trees: vec![], ..model };
        assert!((predict_gbm(&empty, &[0.2]).unwrap() - sigmoid(-0.2)).abs() < 1e-15);
        assert!(predict_gbm(&empty, &[0.2, 1.0]).is_err());
    }
}
