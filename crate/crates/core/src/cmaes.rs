//! Covariance matrix adaptation evolution strategy.
//!
//! A plain (μ/μ_w, λ) CMA-ES with cumulative step-size adaptation and
//! rank-one plus rank-μ covariance updates. The defaults follow the QNN
//! training setup: `σ₀ = 0.15`, `λ = ⌈4 + 3·ln m⌉`, parents `μ = λ/2`,
//! mean learning rate 1 and a damping factor of 1 applied as a multiplier
//! on the canonical step-size damping. The remaining learning rates
//! (`c_σ`, `c_c`, `c_1`, `c_μ`) are the canonical functions of the
//! dimension.
//!
//! The population formula uses the natural logarithm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{derived_rng, stream};

/// `⌈4 + 3·ln m⌉`.
pub fn default_population(m: usize) -> Result<usize> {
    if m == 0 {
        return Err(invalid("population formula needs at least one parameter"));
    }
    Ok((4.0 + 3.0 * (m as f64).ln()).ceil() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaesConfig {
    pub sigma0: f64,
    /// `None` means [`default_population`].
    pub population: Option<usize>,
    /// Fraction of the population used as parents.
    pub parent_fraction: f64,
    pub c_mean: f64,
    /// Multiplier on the canonical `d_σ`.
    pub damping_factor: f64,
    pub max_evaluations: usize,
    pub target_loss: Option<f64>,
    pub seed: u64,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        Self {
            sigma0: 0.15,
            population: None,
            parent_fraction: 0.5,
            c_mean: 1.0,
            damping_factor: 1.0,
            max_evaluations: 10_000,
            target_loss: None,
            seed: 0,
        }
    }
}

impl CmaesConfig {
    pub fn lambda(&self, m: usize) -> Result<usize> {
        match self.population {
            Some(l) => Ok(l),
            None => default_population(m),
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(invalid(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        let lambda = self.lambda(m)?;
        if lambda < 2 {
            return Err(invalid(format!("population must be at least 2, got {lambda}")));
        }
        let mu = self.parents(lambda);
        if mu < 1 || mu > lambda {
            return Err(invalid(format!("parent count {mu} outside 1..={lambda}")));
        }
        if !(self.damping_factor > 0.0) || !(self.c_mean > 0.0) {
            return Err(invalid("c_mean and damping_factor must be positive"));
        }
        Ok(())
    }

    fn parents(&self, lambda: usize) -> usize {
        ((lambda as f64 * self.parent_fraction).floor() as usize).max(1)
    }
}

/// Strategy parameters derived once from `(m, λ, config)`.
#[derive(Debug, Clone)]
struct Strategy {
    lambda: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
    c_mean: f64,
}

impl Strategy {
    fn new(m: usize, config: &CmaesConfig) -> Result<Self> {
        config.validate(m)?;
        let n = m as f64;
        let lambda = config.lambda(m)?;
        let mu = config.parents(lambda);
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = (1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma)
            * config.damping_factor;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Ok(Self {
            lambda,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            c_mean: config.c_mean,
        })
    }
}

/// Best point seen so far with its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestEver {
    pub point: Vec<f64>,
    pub value: f64,
}

/// Mutable search state between `ask` and `tell`.
#[derive(Debug, Clone)]
pub struct CmaesState {
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    /// Eigenvectors of `cov` (columns) and square roots of its eigenvalues.
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    path_sigma: DVector<f64>,
    path_c: DVector<f64>,
    generation: u64,
    best: Option<BestEver>,
    strategy: Strategy,
    seed: u64,
}

impl CmaesState {
    pub fn new(x0: &[f64], config: &CmaesConfig) -> Result<Self> {
        if x0.is_empty() {
            return Err(invalid("CMA-ES needs at least one dimension"));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("CMA-ES start point is not finite"));
        }
        let m = x0.len();
        let strategy = Strategy::new(m, config)?;
        Ok(Self {
            mean: DVector::from_column_slice(x0),
            sigma: config.sigma0,
            cov: DMatrix::identity(m, m),
            basis: DMatrix::identity(m, m),
            scales: DVector::from_element(m, 1.0),
            path_sigma: DVector::zeros(m),
            path_c: DVector::zeros(m),
            generation: 0,
            best: None,
            strategy,
            seed: config.seed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn population_size(&self) -> usize {
        self.strategy.lambda
    }

    pub fn best(&self) -> Option<&BestEver> {
        self.best.as_ref()
    }

    /// Records an externally evaluated point (e.g. the start point) as a
    /// best-ever candidate without touching the distribution.
    pub fn observe(&mut self, point: &[f64], value: f64) {
        if value.is_nan() {
            return;
        }
        if self.best.as_ref().is_none_or(|b| value < b.value) {
            self.best = Some(BestEver {
                point: point.to_vec(),
                value,
            });
        }
    }

    /// Samples λ candidates `mean + σ·N(0, C)`. The draw depends only on the
    /// seed and the generation counter.
    pub fn ask(&self) -> Result<Vec<Vec<f64>>> {
        if self.scales.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::Numerical(
                "covariance matrix is not positive definite".into(),
            ));
        }
        let m = self.dimension();
        let mut rng = derived_rng(self.seed, stream::CMAES, self.generation);
        let mut out = Vec::with_capacity(self.strategy.lambda);
        for _ in 0..self.strategy.lambda {
            let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let y = &self.basis * z.component_mul(&self.scales);
            out.push((&self.mean + y * self.sigma).as_slice().to_vec());
        }
        Ok(out)
    }

    /// Updates the distribution from evaluated candidates.
    pub fn tell(&mut self, candidates: &[Vec<f64>], values: &[f64]) -> Result<()> {
        let st = self.strategy.clone();
        if candidates.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "CMA-ES tell",
                expected: candidates.len(),
                got: values.len(),
            });
        }
        if candidates.len() < st.weights.len() {
            return Err(invalid(format!(
                "need at least {} candidates, got {}",
                st.weights.len(),
                candidates.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Numerical(format!("objective value {i} is NaN")));
        }
        let m = self.dimension();
        if let Some(c) = candidates.iter().find(|c| c.len() != m) {
            return Err(Error::DimensionMismatch {
                context: "CMA-ES candidate",
                expected: m,
                got: c.len(),
            });
        }
        for (c, &v) in candidates.iter().zip(values) {
            self.observe(c, v);
        }

        // Stable sort: ties keep sampling order.
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

        let ys: Vec<DVector<f64>> = order[..st.weights.len()]
            .iter()
            .map(|&i| (DVector::from_column_slice(&candidates[i]) - &self.mean) / self.sigma)
            .collect();
        let y_w = ys
            .iter()
            .zip(&st.weights)
            .fold(DVector::zeros(m), |acc, (y, w)| acc + y * *w);

        self.mean += &y_w * (st.c_mean * self.sigma);

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let inv_sqrt_y = &self.basis * (self.basis.transpose() * &y_w).component_div(&self.scales);
        self.path_sigma = &self.path_sigma * (1.0 - st.c_sigma)
            + inv_sqrt_y * (st.c_sigma * (2.0 - st.c_sigma) * st.mu_eff).sqrt();

        let gen = self.generation as f64 + 1.0;
        let ps_norm = self.path_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - st.c_sigma).powf(2.0 * gen)).sqrt()
            < (1.4 + 2.0 / (m as f64 + 1.0)) * st.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.path_c = &self.path_c * (1.0 - st.c_c)
            + &y_w * (h * (st.c_c * (2.0 - st.c_c) * st.mu_eff).sqrt());

        let delta_h = (1.0 - h) * st.c_c * (2.0 - st.c_c);
        let rank_one = &self.path_c * self.path_c.transpose();
        let rank_mu = ys
            .iter()
            .zip(&st.weights)
            .fold(DMatrix::zeros(m, m), |acc, (y, w)| acc + (y * y.transpose()) * *w);
        self.cov = &self.cov * (1.0 - st.c_1 - st.c_mu + delta_h * st.c_1)
            + rank_one * st.c_1
            + rank_mu * st.c_mu;

        self.sigma *= ((st.c_sigma / st.d_sigma) * (ps_norm / st.chi_n - 1.0)).exp();
        self.generation += 1;
        self.refresh_decomposition()
    }

    /// Symmetrizes `C`, floors its eigenvalues at 1e-14 and caches `B`, `D`.
    fn refresh_decomposition(&mut self) -> Result<()> {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("covariance matrix has non-finite entries".into()));
        }
        let eig = SymmetricEigen::new(sym);
        let floored = eig.eigenvalues.map(|l| l.max(1e-14));
        self.cov = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;
        self.scales = floored.map(f64::sqrt);
        self.basis = eig.eigenvectors;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    MaxEvaluations,
    TargetReached,
    SigmaCollapsed,
    SigmaDiverged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmaesOutcome {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Best-ever value after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub generations: u64,
    pub termination: Termination,
}

/// Minimizes `objective` from `x0`.
///
/// The start point is evaluated first and seeds the best-ever record. Whole
/// generations are run while they fit in `max_evaluations`.
pub fn minimize<F>(mut objective: F, x0: &[f64], config: &CmaesConfig) -> Result<CmaesOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut state = CmaesState::new(x0, config)?;
    let f0 = objective(x0)?;
    if f0.is_nan() {
        return Err(Error::Numerical("objective is NaN at the start point".into()));
    }
    state.observe(x0, f0);
    let mut evaluations = 1;
    let mut trace = Vec::new();
    let lambda = state.population_size();

    let termination = loop {
        let best = state.best().map_or(f64::INFINITY, |b| b.value);
        if config.target_loss.is_some_and(|t| best <= t) {
            break Termination::TargetReached;
        }
        if evaluations + lambda > config.max_evaluations {
            break Termination::MaxEvaluations;
        }
        if state.sigma() < 1e-12 {
            break Termination::SigmaCollapsed;
        }
        if state.sigma() > 1e7 * config.sigma0 {
            break Termination::SigmaDiverged;
        }
        let candidates = state.ask()?;
        let values = candidates
            .iter()
            .map(|c| objective(c))
            .collect::<Result<Vec<f64>>>()?;
        evaluations += lambda;
        state.tell(&candidates, &values)?;
        trace.push(state.best().map_or(f64::INFINITY, |b| b.value));
    };

    let best = state.best().cloned().expect("start point always recorded");
    Ok(CmaesOutcome {
        best_point: best.point,
        best_value: best.value,
        trace,
        evaluations,
        generations: state.generation(),
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn population_formula() {
        assert_eq!(default_population(1).unwrap(), 4);
        assert_eq!(default_population(13).unwrap(), 12);
        assert_eq!(default_population(20).unwrap(), 13);
        assert!(default_population(0).is_err());
    }

    #[test]
    fn config_validation() {
        let bad_sigma = CmaesConfig {
            sigma0: 0.0,
            ..Default::default()
        };
        assert!(CmaesState::new(&[0.0], &bad_sigma).is_err());
        let tiny = CmaesConfig {
            population: Some(1),
            ..Default::default()
        };
        assert!(CmaesState::new(&[0.0], &tiny).is_err());
    }

    #[test]
    fn collapsed_sigma_samples_the_mean() {
        let cfg = CmaesConfig {
            sigma0: 1e-300,
            ..Default::default()
        };
        let state = CmaesState::new(&[0.5, -1.0], &cfg).unwrap();
        for c in state.ask().unwrap() {
            assert!((c[0] - 0.5).abs() < 1e-250 && (c[1] + 1.0).abs() < 1e-250);
        }
    }

    #[test]
    fn ask_is_seeded() {
        let cfg = CmaesConfig {
            seed: 42,
            ..Default::default()
        };
        let a = CmaesState::new(&[0.0; 3], &cfg).unwrap().ask().unwrap();
        let b = CmaesState::new(&[0.0; 3], &cfg).unwrap().ask().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nan_values_rejected() {
        let cfg = CmaesConfig::default();
        let mut state = CmaesState::new(&[0.0; 2], &cfg).unwrap();
        let c = state.ask().unwrap();
        let mut v = vec![1.0; c.len()];
        v[2] = f64::NAN;
        assert!(matches!(state.tell(&c, &v), Err(Error::Numerical(_))));
    }

    #[test]
    fn equal_values_recombine_first_parents() {
        let cfg = CmaesConfig::default();
        let mut state = CmaesState::new(&[0.0; 2], &cfg).unwrap();
        state.observe(&[0.0, 0.0], 1.0);
        let c = state.ask().unwrap();
        let mu = state.strategy.weights.len();
        let weights = state.strategy.weights.clone();
        state.tell(&c, &vec![1.0; c.len()]).unwrap();
        for d in 0..2 {
            let expected: f64 = (0..mu).map(|i| weights[i] * c[i][d]).sum();
            assert!((state.mean()[d] - expected).abs() < 1e-15);
        }
        // Not improved: ties do not replace the incumbent.
        assert_eq!(state.best().unwrap().point, vec![0.0, 0.0]);
    }

    #[test]
    fn optimal_start_is_returned() {
        let cfg = CmaesConfig {
            target_loss: Some(0.0),
            ..Default::default()
        };
        let out = minimize(sphere, &[0.0; 4], &cfg).unwrap();
        assert_eq!(out.best_value, 0.0);
        assert_eq!(out.evaluations, 1);
        assert_eq!(out.termination, Termination::TargetReached);
    }

    #[test]
    fn quadratic_progress_and_monotone_trace() {
        let cfg = CmaesConfig {
            max_evaluations: 1 + 50 * default_population(2).unwrap(),
            seed: 3,
            ..Default::default()
        };
        let out = minimize(sphere, &[1.0, 0.0], &cfg).unwrap();
        assert_eq!(out.trace.len(), 50);
        assert!(out.best_value <= 1e-6, "{}", out.best_value);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn covariance_stays_symmetric() {
        let cfg = CmaesConfig {
            seed: 9,
            ..Default::default()
        };
        let mut state = CmaesState::new(&[1.0, 2.0, 3.0], &cfg).unwrap();
        let f = |x: &[f64]| x[0] * x[0] + 10.0 * x[1] * x[1] + 100.0 * (x[2] - x[0]).powi(2);
        for _ in 0..40 {
            let c = state.ask().unwrap();
            let v: Vec<f64> = c.iter().map(|x| f(x)).collect();
            state.tell(&c, &v).unwrap();
            let cov = state.covariance();
            assert!((cov - cov.transpose()).amax() <= 1e-12);
            assert!(state.sigma() > 0.0);
        }
    }
}
