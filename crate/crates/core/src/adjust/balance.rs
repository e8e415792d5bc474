use std::io::Write;

use serde::{Deserialize, Serialize};

use super::balance_stats::{chi_square_test, smd_lenient, two_sample_t_test};
use super::matching::MatchSet;
use super::weights::WeightVector;
use crate::data::{Cohort, VariableKind};
use crate::error::{invalid, Error, Result};

/// How the "after" sample is formed.
#[derive(Debug, Clone, Copy)]
pub enum Adjustment<'a> {
    None,
    Weights(&'a WeightVector),
    /// Matched subset, pairs treated as independent observations.
    Matches(&'a MatchSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub smd_before: f64,
    pub smd_after: f64,
    /// `t-test` for continuous covariates, `chisq` otherwise.
    pub test: String,
    /// `None` when the test is undefined on that sample.
    pub p_before: Option<f64>,
    pub p_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub rows: Vec<BalanceRow>,
    pub mean_smd_before: f64,
    pub mean_smd_after: f64,
}

fn p_value(kind: VariableKind, x: &[f64], z: &[f64], w: Option<&[f64]>) -> Result<Option<f64>> {
    let r = match kind {
        VariableKind::Continuous => two_sample_t_test(x, z, w),
        _ => chi_square_test(x, z, w),
    };
    match r {
        Ok(t) => Ok(Some(t.p)),
        Err(Error::Degenerate(_)) | Err(Error::InvalidInput(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Per-covariate SMD and test p-values before and after adjustment.
pub fn balance_report(cohort: &Cohort, covariates: &[&str], adjustment: Adjustment<'_>) -> Result<BalanceReport> {
    if covariates.is_empty() {
        return Err(invalid("no covariates to report"));
    }
    let z = cohort.treatment()?;
    let n = z.len();
    let (subset, weights): (Option<Vec<usize>>, Option<&[f64]>) = match adjustment {
        Adjustment::None => (None, None),
        Adjustment::Weights(w) => {
            if w.weights.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "weights vs cohort",
                    expected: n,
                    got: w.weights.len(),
                });
            }
            (None, Some(&w.weights))
        }
        Adjustment::Matches(m) => {
            if m.pairs.iter().any(|&(t, c)| t >= n || c >= n) {
                return Err(invalid("match set indexes past the cohort"));
            }
            if m.pairs.is_empty() {
                return Err(Error::Degenerate("match set is empty".into()));
            }
            (Some(m.matched_indices()), None)
        }
    };
    let z_after: Vec<f64> = match &subset {
        Some(idx) => idx.iter().map(|&i| z[i]).collect(),
        None => z.clone(),
    };

    let mut rows = Vec::with_capacity(covariates.len());
    for &name in covariates {
        let kind = cohort
            .schema()
            .get(name)
            .ok_or_else(|| invalid(format!("unknown covariate `{name}`")))?
            .kind;
        let x = cohort.column(name)?;
        let x_after: Vec<f64> = match &subset {
            Some(idx) => idx.iter().map(|&i| x[i]).collect(),
            None => x.clone(),
        };
        rows.push(BalanceRow {
            covariate: name.to_string(),
            smd_before: smd_lenient(&x, &z, None)?,
            smd_after: smd_lenient(&x_after, &z_after, weights)?,
            test: if kind == VariableKind::Continuous { "t-test" } else { "chisq" }.to_string(),
            p_before: p_value(kind, &x, &z, None)?,
            p_after: p_value(kind, &x_after, &z_after, weights)?,
        });
    }
    let k = rows.len() as f64;
    Ok(BalanceReport {
        mean_smd_before: rows.iter().map(|r| r.smd_before.abs()).sum::<f64>() / k,
        mean_smd_after: rows.iter().map(|r| r.smd_after.abs()).sum::<f64>() / k,
        rows,
    })
}

impl BalanceReport {
    /// Columns `covariate,smd_before,smd_after,test,p_before,p_after`;
    /// undefined p-values are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["covariate", "smd_before", "smd_after", "test", "p_before", "p_after"])?;
        let p = |v: Option<f64>| v.map_or(String::new(), |p| p.to_string());
        for r in &self.rows {
            w.write_record([
                r.covariate.clone(),
                r.smd_before.to_string(),
                r.smd_after.to_string(),
                r.test.clone(),
                p(r.p_before),
                p(r.p_after),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
