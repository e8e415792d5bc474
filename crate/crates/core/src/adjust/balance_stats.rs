use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{chi_square_sf, effective_n, student_t_two_sided_p, weighted_moments};

/// Statistic, degrees of freedom and two-sided p-value of a balance test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p: f64,
}

/// Values, weights split into (treated, control).
pub(crate) struct Groups {
    pub x1: Vec<f64>,
    pub w1: Vec<f64>,
    pub x0: Vec<f64>,
    pub w0: Vec<f64>,
}

pub(crate) fn check_z(z: &[f64], n: usize) -> Result<()> {
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            context: "treatment indicator",
            expected: n,
            got: z.len(),
        });
    }
    if let Some(i) = z.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(invalid(format!("treatment {i} is {}, expected 0 or 1", z[i])));
    }
    Ok(())
}

pub(crate) fn split(values: &[f64], z: &[f64], weights: Option<&[f64]>) -> Result<Groups> {
    check_z(z, values.len())?;
    if let Some(w) = weights {
        if w.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "weights",
                expected: values.len(),
                got: w.len(),
            });
        }
        if let Some(i) = w.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(invalid(format!("weight {i} is negative or not finite")));
        }
    }
    let mut g = Groups {
        x1: vec![],
        w1: vec![],
        x0: vec![],
        w0: vec![],
    };
    for i in 0..values.len() {
        let w = weights.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            continue;
        }
        if z[i] == 1.0 {
            g.x1.push(values[i]);
            g.w1.push(w);
        } else {
            g.x0.push(values[i]);
            g.w0.push(w);
        }
    }
    if g.x1.is_empty() || g.x0.is_empty() {
        return Err(Error::Degenerate("one treatment group is empty".into()));
    }
    Ok(g)
}

pub(crate) fn is_dichotomous(values: &[f64]) -> bool {
    values.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Group means and variances used by the SMD; `p(1 − p)` stands in for the
/// variance of a 0/1 covariate.
fn smd_parts(values: &[f64], g: &Groups) -> (f64, f64) {
    let (m1, v1) = weighted_moments(&g.x1, &g.w1);
    let (m0, v0) = weighted_moments(&g.x0, &g.w0);
    let (v1, v0) = if is_dichotomous(values) {
        (m1 * (1.0 - m1), m0 * (1.0 - m0))
    } else {
        (v1, v0)
    };
    (m1 - m0, ((v1 + v0) / 2.0).sqrt())
}

/// Signed standardized mean difference, treated minus control.
pub fn smd(values: &[f64], z: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    let g = split(values, z, weights)?;
    let (diff, pooled) = smd_parts(values, &g);
    if pooled == 0.0 {
        return Err(Error::Degenerate("covariate has zero pooled variance".into()));
    }
    Ok(diff / pooled)
}

/// SMD that reads a constant covariate with equal group means as balanced
/// and with unequal means as infinitely imbalanced.
pub(crate) fn smd_lenient(values: &[f64], z: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    let g = split(values, z, weights)?;
    let (diff, pooled) = smd_parts(values, &g);
    Ok(match (pooled == 0.0, diff == 0.0) {
        (false, _) => diff / pooled,
        (true, true) => 0.0,
        (true, false) => diff.signum() * f64::INFINITY,
    })
}

/// Welch's unequal-variance t-test. With weights, the group sizes are the
/// Kish effective sizes.
pub fn two_sample_t_test(values: &[f64], z: &[f64], weights: Option<&[f64]>) -> Result<TestResult> {
    let g = split(values, z, weights)?;
    if g.x1.len() < 2 || g.x0.len() < 2 {
        return Err(invalid("t-test needs at least two subjects per group"));
    }
    let (m1, v1) = weighted_moments(&g.x1, &g.w1);
    let (m0, v0) = weighted_moments(&g.x0, &g.w0);
    let (n1, n0) = (effective_n(&g.w1), effective_n(&g.w0));
    let (a, b) = (v1 / n1, v0 / n0);
    if a + b == 0.0 {
        return Err(Error::Degenerate("zero variance in both groups".into()));
    }
    let t = (m1 - m0) / (a + b).sqrt();
    let df = (a + b) * (a + b) / (a * a / (n1 - 1.0) + b * b / (n0 - 1.0));
    Ok(TestResult {
        statistic: t,
        df,
        p: student_t_two_sided_p(t, df),
    })
}

/// Pearson chi-square on the category × group table (no continuity
/// correction). Weighted counts are used as given.
pub fn chi_square_test(categories: &[f64], z: &[f64], weights: Option<&[f64]>) -> Result<TestResult> {
    let g = split(categories, z, weights)?;
    let mut levels: Vec<f64> = g.x1.iter().chain(&g.x0).copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::Degenerate("chi-square needs at least two categories".into()));
    }
    let count = |xs: &[f64], ws: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; levels.len()];
        for (x, w) in xs.iter().zip(ws) {
            let k = levels.partition_point(|l| l < x);
            c[k] += w;
        }
        c
    };
    let c1 = count(&g.x1, &g.w1);
    let c0 = count(&g.x0, &g.w0);
    let (t1, t0): (f64, f64) = (c1.iter().sum(), c0.iter().sum());
    let total = t1 + t0;
    let mut stat = 0.0;
    for k in 0..levels.len() {
        let row = c1[k] + c0[k];
        for (obs, col) in [(c1[k], t1), (c0[k], t0)] {
            let e = row * col / total;
            stat += (obs - e) * (obs - e) / e;
        }
    }
    let df = (levels.len() - 1) as f64;
    Ok(TestResult {
        statistic: stat,
        df,
        p: chi_square_sf(stat, df),
    })
}
