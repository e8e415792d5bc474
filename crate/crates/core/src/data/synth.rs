use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::cohort::Cohort;
use super::schema::{CohortSchema, EVENT, TIME, TREATMENT};
use crate::classical::sigmoid;
use crate::error::{invalid, Result};
use crate::rng::{derived_rng, stream};

/// Parameters of the synthetic confounded cohort.
///
/// Treatment log-odds are `intercept + sex_effect·(Sex − 0.55) −
/// stage_effect·(Stage − 2.5)`, so earlier stages favor laparoscopy. The
/// monthly hazard is `baseline_hazard · exp(stage_log_hr·(Stage − 1) +
/// age_log_hr·(Age − 68) + treatment_log_hr·Z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub treatment_intercept: f64,
    pub stage_effect: f64,
    pub sex_effect: f64,
    pub treatment_log_hr: f64,
    pub baseline_hazard: f64,
    pub stage_log_hr: f64,
    pub age_log_hr: f64,
    /// Expected fraction of censored subjects.
    pub censoring_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 500,
            treatment_intercept: 0.1,
            stage_effect: 0.6,
            sex_effect: 0.4,
            treatment_log_hr: 0.0,
            baseline_hazard: 0.008,
            stage_log_hr: 0.6,
            age_log_hr: 0.02,
            censoring_rate: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 20 {
            return Err(invalid(format!("synthetic cohort needs n >= 20, got {}", self.n)));
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return Err(invalid("censoring rate must lie in [0, 1)"));
        }
        if !(self.baseline_hazard > 0.0 && self.baseline_hazard.is_finite()) {
            return Err(invalid("baseline hazard must be positive"));
        }
        let effects = [
            self.treatment_intercept,
            self.stage_effect,
            self.sex_effect,
            self.treatment_log_hr,
            self.stage_log_hr,
            self.age_log_hr,
        ];
        if effects.iter().any(|e| !e.is_finite()) {
            return Err(invalid("effect sizes must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohort {
    pub cohort: Cohort,
    /// Propensity used to draw each subject's treatment.
    pub true_propensity: Vec<f64>,
}

pub const SYNTH_COLUMNS: [&str; 8] = ["Age", "Sex", "BMI", "ASA", "Stage", TREATMENT, TIME, EVENT];

const MAX_MONTHS: f64 = 600.0;

fn categorical<R: Rng>(rng: &mut R, probs: &[f64], first: f64) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return first + k as f64;
        }
    }
    first + (probs.len() - 1) as f64
}

/// Upper end `c` of a `U(0, c)` censoring law under which the expected
/// censored fraction of the given event times is `rate`.
fn censoring_cap(times: &[f64], rate: f64) -> f64 {
    let frac = |c: f64| times.iter().map(|&t| t.min(c) / c).sum::<f64>() / times.len() as f64;
    let (mut lo, mut hi) = (1e-9f64, 1e12f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if frac(mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Draws a confounded cohort: Stage and Sex drive treatment, Stage and Age
/// drive the hazard. Times are rounded up to whole months, capped at 600
/// months (censored there).
pub fn generate_synthetic_cohort(config: &SynthConfig) -> Result<SyntheticCohort> {
    config.validate()?;
    let mut rng = derived_rng(config.seed, stream::SYNTH, 0);
    let age_law = Normal::<f64>::new(68.0, 10.0).expect("valid normal");
    let bmi_law = Normal::<f64>::new(27.0, 4.5).expect("valid normal");
    let unit_exp = Exp::<f64>::new(1.0).expect("valid rate");

    let mut rows = Vec::with_capacity(config.n);
    let mut ps = Vec::with_capacity(config.n);
    let mut latent = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let age = age_law.sample(&mut rng).clamp(18.0, 100.0).round();
        let bmi = (bmi_law.sample(&mut rng).clamp(15.0, 50.0) * 10.0).round() / 10.0;
        let sex = f64::from(rng.random::<f64>() < 0.55);
        let asa = categorical(&mut rng, &[0.14, 0.45, 0.36, 0.05], 1.0);
        let stage = categorical(&mut rng, &[0.2, 0.3, 0.3, 0.2], 1.0);
        let e = sigmoid(
            config.treatment_intercept + config.sex_effect * (sex - 0.55)
                - config.stage_effect * (stage - 2.5),
        );
        let z = f64::from(rng.random::<f64>() < e);
        let hazard = config.baseline_hazard
            * (config.stage_log_hr * (stage - 1.0)
                + config.age_log_hr * (age - 68.0)
                + config.treatment_log_hr * z)
                .exp();
        latent.push(unit_exp.sample(&mut rng) / hazard);
        ps.push(e);
        rows.push(vec![age, sex, bmi, asa, stage, z, 0.0, 0.0]);
    }

    let cap = (config.censoring_rate > 0.0).then(|| censoring_cap(&latent, config.censoring_rate));
    for (row, &t) in rows.iter_mut().zip(&latent) {
        let c = cap.map_or(f64::INFINITY, |cap| rng.random::<f64>() * cap);
        let observed = t.min(c);
        let (time, event) = if observed > MAX_MONTHS {
            (MAX_MONTHS, 0.0)
        } else {
            (observed.ceil().max(1.0), f64::from(t <= c))
        };
        row[6] = time;
        row[7] = event;
    }
    let cohort = Cohort::new(
        CohortSchema::colorectal(),
        SYNTH_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    )?;
    Ok(SyntheticCohort {
        cohort,
        true_propensity: ps,
    })
}
