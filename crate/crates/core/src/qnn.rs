//! Quantum neural network regressor used as a propensity model.
//!
//! The model output is the expectation of a summed-Pauli observable
//! `a·I + Σ b_{q,P} P_q` in the state prepared by the angle-encoding circuit.
//! Training minimizes `Σ wᵢ (f(xᵢ) − yᵢ)² + α Σ σ_f²(xᵢ)` with CMA-ES.
//!
//! Parameters pack as `a`, then `b` in `(qubit, X<Y<Z)` order, then the
//! optional circuit angles.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::cmaes::{self, CmaesConfig, Termination};
use crate::error::{invalid, Error, Result};
use crate::quantum::{
    apply_circuit, build_feature_map, expectation, sample_expectation, sample_noisy_expectation,
    variance, variational_len, EncodingCircuit, NoiseModel, Pauli, PauliSumObservable,
};
use crate::rng::{derive_seed, derived_rng, stream};

/// How the observable expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EvalMode {
    /// Statevector expectation.
    Exact,
    /// Finite-shot sampling.
    Shots(u64),
    /// Finite-shot sampling under a noise model.
    Noisy(NoiseModel, u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnnConfig {
    pub n_qubits: usize,
    /// Re-uploading depth.
    pub layers: usize,
    /// Adds a trainable RZ·RY block per qubit and layer.
    pub variational: bool,
    pub eval_mode: EvalMode,
    /// Weight of the variance regularizer.
    pub alpha: f64,
    /// Propensities are clamped to `[ε, 1 − ε]`.
    pub clip_epsilon: f64,
    pub seed: u64,
    pub optimizer: CmaesConfig,
}

impl QnnConfig {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            layers: 1,
            variational: false,
            eval_mode: EvalMode::Exact,
            alpha: 1e-3,
            clip_epsilon: 1e-3,
            seed: 0,
            optimizer: CmaesConfig {
                max_evaluations: 3000,
                ..CmaesConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.layers == 0 {
            return Err(invalid("QNN needs at least one qubit and one layer"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha must be a nonnegative number, got {}", self.alpha)));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 0.5) {
            return Err(invalid(format!(
                "clip_epsilon must lie in (0, 0.5), got {}",
                self.clip_epsilon
            )));
        }
        match self.eval_mode {
            EvalMode::Exact => {}
            EvalMode::Shots(0) | EvalMode::Noisy(_, 0) => {
                return Err(invalid("shot count must be at least 1"))
            }
            EvalMode::Shots(_) => {}
            EvalMode::Noisy(noise, _) => noise.validate()?,
        }
        Ok(())
    }

    /// Total packed parameter count.
    pub fn parameter_count(&self) -> usize {
        1 + 3 * self.n_qubits + self.angle_count()
    }

    fn angle_count(&self) -> usize {
        if self.variational {
            variational_len(self.n_qubits, self.layers)
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QnnParams {
    pub identity: f64,
    /// `b_{q,P}` in `(qubit, X<Y<Z)` order.
    pub coeffs: Vec<f64>,
    pub angles: Option<Vec<f64>>,
}

impl QnnParams {
    pub fn zeros(config: &QnnConfig) -> Self {
        Self {
            identity: 0.0,
            coeffs: vec![0.0; 3 * config.n_qubits],
            angles: config.variational.then(|| vec![0.0; config.angle_count()]),
        }
    }

    /// Starting point for training: `a = 0.5`, `b ~ U(−0.1, 0.1)`, angles 0.
    pub fn initial(config: &QnnConfig) -> Self {
        let mut rng = derived_rng(config.seed, stream::QNN_INIT, 0);
        let mut p = Self::zeros(config);
        p.identity = 0.5;
        for b in &mut p.coeffs {
            *b = rng.random_range(-0.1..0.1);
        }
        p
    }

    pub fn coeff(&self, qubit: usize, pauli: Pauli) -> f64 {
        self.coeffs[3 * qubit + pauli as usize]
    }

    pub fn set_coeff(&mut self, qubit: usize, pauli: Pauli, value: f64) {
        self.coeffs[3 * qubit + pauli as usize] = value;
    }

    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.coeffs.len());
        v.push(self.identity);
        v.extend_from_slice(&self.coeffs);
        if let Some(a) = &self.angles {
            v.extend_from_slice(a);
        }
        v
    }

    pub fn unpack(packed: &[f64], config: &QnnConfig) -> Result<Self> {
        let expected = config.parameter_count();
        if packed.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "packed QNN parameters",
                expected,
                got: packed.len(),
            });
        }
        let nb = 3 * config.n_qubits;
        Ok(Self {
            identity: packed[0],
            coeffs: packed[1..1 + nb].to_vec(),
            angles: config.variational.then(|| packed[1 + nb..].to_vec()),
        })
    }

    pub fn observable(&self) -> PauliSumObservable {
        PauliSumObservable::summed_paulis(self.identity, &self.coeffs)
            .expect("coefficient count is a multiple of three")
    }

    fn check(&self, config: &QnnConfig) -> Result<()> {
        if self.coeffs.len() != 3 * config.n_qubits {
            return Err(Error::DimensionMismatch {
                context: "observable coefficients",
                expected: 3 * config.n_qubits,
                got: self.coeffs.len(),
            });
        }
        let got = self.angles.as_ref().map_or(0, Vec::len);
        if got != config.angle_count() {
            return Err(Error::DimensionMismatch {
                context: "circuit angles",
                expected: config.angle_count(),
                got,
            });
        }
        Ok(())
    }
}

fn circuit_for(params: &QnnParams, x: &[f64], config: &QnnConfig) -> Result<EncodingCircuit> {
    if x.len() != config.n_qubits {
        return Err(Error::DimensionMismatch {
            context: "QNN input",
            expected: config.n_qubits,
            got: x.len(),
        });
    }
    params.check(config)?;
    build_feature_map(x, config.layers, params.angles.as_deref())
}

/// Raw QNN output with an explicit sampling seed (ignored in exact mode).
pub fn predict_seeded(params: &QnnParams, x: &[f64], config: &QnnConfig, seed: u64) -> Result<f64> {
    let circuit = circuit_for(params, x, config)?;
    let obs = params.observable();
    match config.eval_mode {
        EvalMode::Exact => expectation(&apply_circuit(&circuit), &obs),
        EvalMode::Shots(shots) => sample_expectation(&circuit, &obs, shots, seed),
        EvalMode::Noisy(noise, shots) => {
            sample_noisy_expectation(&circuit, &obs, &noise, shots, seed)
        }
    }
}

/// Raw QNN output `f(x, θ)`.
pub fn predict(params: &QnnParams, x: &[f64], config: &QnnConfig) -> Result<f64> {
    predict_seeded(params, x, config, derive_seed(config.seed, stream::PREDICT, 0))
}

/// Maps a raw output onto a propensity by clamping.
pub fn clip_propensity(raw: f64, clip_epsilon: f64) -> f64 {
    raw.clamp(clip_epsilon, 1.0 - clip_epsilon)
}

pub fn predict_propensity(params: &QnnParams, x: &[f64], config: &QnnConfig) -> Result<f64> {
    Ok(clip_propensity(predict(params, x, config)?, config.clip_epsilon))
}

/// Raw outputs for every row. Row `i` in sampling modes uses sub-seed
/// `(seed, eval, i)`.
pub fn predict_rows(
    params: &QnnParams,
    rows: &[Vec<f64>],
    config: &QnnConfig,
    eval: u64,
) -> Result<Vec<f64>> {
    let base = derive_seed(config.seed, stream::QNN_EVAL, eval);
    rows.iter()
        .enumerate()
        .map(|(i, x)| predict_seeded(params, x, config, derive_seed(base, stream::PREDICT, i as u64)))
        .collect()
}

fn check_weights(n: usize, y: &[f64], w: &[f64]) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "labels",
            expected: n,
            got: y.len(),
        });
    }
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            context: "sample weights",
            expected: n,
            got: w.len(),
        });
    }
    if let Some(i) = w.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid(format!("weight {i} is not strictly positive")));
    }
    Ok(())
}

fn weighted_sq_error(preds: &[f64], y: &[f64], w: &[f64]) -> f64 {
    preds
        .iter()
        .zip(y)
        .zip(w)
        .map(|((f, y), w)| w * (f - y) * (f - y))
        .sum()
}

/// `Σ wᵢ (f(xᵢ) − yᵢ)²` on raw predictions.
pub fn loss_fit(
    params: &QnnParams,
    rows: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    config: &QnnConfig,
) -> Result<f64> {
    check_weights(rows.len(), y, w)?;
    Ok(weighted_sq_error(&predict_rows(params, rows, config, 0)?, y, w))
}

/// `Σₖ σ_f²(xₖ)`, always from the exact statevector.
pub fn loss_variance(params: &QnnParams, rows: &[Vec<f64>], config: &QnnConfig) -> Result<f64> {
    if rows.is_empty() {
        return Err(invalid("variance regularizer needs at least one row"));
    }
    let obs = params.observable();
    rows.iter()
        .map(|x| variance(&apply_circuit(&circuit_for(params, x, config)?), &obs))
        .sum()
}

fn total_loss_at(
    params: &QnnParams,
    rows: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    config: &QnnConfig,
    eval: u64,
) -> Result<f64> {
    let fit = weighted_sq_error(&predict_rows(params, rows, config, eval)?, y, w);
    if config.alpha == 0.0 {
        return Ok(fit);
    }
    Ok(fit + config.alpha * loss_variance(params, rows, config)?)
}

/// `L_fit + α·L_var`, the training objective.
pub fn total_loss(
    params: &QnnParams,
    rows: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    config: &QnnConfig,
) -> Result<f64> {
    check_weights(rows.len(), y, w)?;
    total_loss_at(params, rows, y, w, config, 0)
}

/// `∂f/∂θ` in packed order by the parameter-shift rule (exact mode only).
///
/// Observable coefficients differentiate to the measured Pauli
/// expectations; each circuit angle sits in exactly one `exp(−iθP/2)` gate,
/// so `(f(θ + π/2) − f(θ − π/2)) / 2` is exact.
pub fn gradient_parameter_shift(params: &QnnParams, x: &[f64], config: &QnnConfig) -> Result<Vec<f64>> {
    if config.eval_mode != EvalMode::Exact {
        return Err(invalid("parameter-shift gradients require exact evaluation"));
    }
    let circuit = circuit_for(params, x, config)?;
    let state = apply_circuit(&circuit);
    let mut grad = Vec::with_capacity(config.parameter_count());
    grad.push(1.0);
    for q in 0..config.n_qubits {
        for p in Pauli::ALL {
            grad.push(state.pauli_expectation(q, p));
        }
    }
    if let Some(angles) = &params.angles {
        let shift = std::f64::consts::FRAC_PI_2;
        for j in 0..angles.len() {
            let mut shifted = params.clone();
            let a = shifted.angles.as_mut().expect("angles present");
            a[j] = angles[j] + shift;
            let plus = predict(&shifted, x, config)?;
            let a = shifted.angles.as_mut().expect("angles present");
            a[j] = angles[j] - shift;
            let minus = predict(&shifted, x, config)?;
            grad.push((plus - minus) / 2.0);
        }
    }
    Ok(grad)
}

/// A trained QNN.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedQnn {
    pub config: QnnConfig,
    pub params: QnnParams,
    pub best_loss: f64,
    /// Best-so-far training loss after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub termination: Termination,
}

impl FittedQnn {
    /// Clipped propensities for `rows`.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(predict_rows(&self.params, rows, &self.config, u64::MAX)?
            .into_iter()
            .map(|r| clip_propensity(r, self.config.clip_epsilon))
            .collect())
    }
}

/// Trains the QNN with CMA-ES on `total_loss`.
///
/// In sampling modes every objective call draws fresh shot noise from the
/// sub-seed `(seed, evaluation counter)`, so the objective is stochastic but
/// reproducible.
pub fn fit(rows: &[Vec<f64>], y: &[f64], w: Option<&[f64]>, config: &QnnConfig) -> Result<FittedQnn> {
    config.validate()?;
    if rows.len() < 2 {
        return Err(invalid("QNN training needs at least two rows"));
    }
    let unit;
    let w = match w {
        Some(w) => w,
        None => {
            unit = vec![1.0; rows.len()];
            &unit
        }
    };
    check_weights(rows.len(), y, w)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(invalid("treatment labels must be 0 or 1"));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::Degenerate("labels contain a single class".into()));
    }
    if let Some(x) = rows.iter().find(|x| x.len() != config.n_qubits) {
        return Err(Error::DimensionMismatch {
            context: "QNN input",
            expected: config.n_qubits,
            got: x.len(),
        });
    }

    let x0 = QnnParams::initial(config).pack();
    let optimizer = CmaesConfig {
        seed: derive_seed(config.seed, stream::CMAES, 0),
        ..config.optimizer.clone()
    };
    let mut eval = 0u64;
    let outcome = cmaes::minimize(
        |theta| {
            let params = QnnParams::unpack(theta, config)?;
            eval += 1;
            total_loss_at(&params, rows, y, w, config, eval)
        },
        &x0,
        &optimizer,
    )?;
    Ok(FittedQnn {
        config: config.clone(),
        params: QnnParams::unpack(&outcome.best_point, config)?,
        best_loss: outcome.best_value,
        trace: outcome.trace,
        evaluations: outcome.evaluations,
        termination: outcome.termination,
    })
}
