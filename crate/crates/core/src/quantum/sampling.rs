use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::rng_from;

use super::circuit::{apply_circuit, EncodingCircuit};
use super::observable::PauliSumObservable;

/// Gate-level stochastic Pauli noise plus symmetric readout error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Probability of a uniformly random X/Y/Z after each gate on the
    /// touched qubit.
    pub depolarizing_prob: f64,
    /// Probability that a measured bit is reported flipped.
    pub readout_flip_prob: f64,
}

impl NoiseModel {
    pub fn new(depolarizing_prob: f64, readout_flip_prob: f64) -> Result<Self> {
        let model = Self {
            depolarizing_prob,
            readout_flip_prob,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless() -> Self {
        Self {
            depolarizing_prob: 0.0,
            readout_flip_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("depolarizing_prob", self.depolarizing_prob),
            ("readout_flip_prob", self.readout_flip_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        Err(invalid("shots must be at least 1"))
    } else {
        Ok(())
    }
}

/// Probability of the `+1` outcome when measuring `P` given `⟨P⟩`.
fn plus_probability(expectation: f64) -> f64 {
    ((1.0 + expectation) / 2.0).clamp(0.0, 1.0)
}

fn with_readout_error(p_plus: f64, flip: f64) -> f64 {
    if flip == 0.0 {
        p_plus
    } else {
        p_plus * (1.0 - flip) + (1.0 - p_plus) * flip
    }
}

fn binomial_estimate<R: Rng>(rng: &mut R, shots: u64, p_plus: f64) -> Result<f64> {
    let k = Binomial::new(shots, p_plus)
        .map_err(|e| invalid(format!("binomial({shots}, {p_plus}): {e}")))?
        .sample(rng);
    Ok(2.0 * k as f64 / shots as f64 - 1.0)
}

/// Shot-sampled estimate of `⟨Ĉ⟩`.
///
/// Every non-zero Pauli term is measured in its own eigenbasis with its own
/// budget of `shots` repetitions; the `+1` count of a term is binomial in
/// the term's outcome probability. Terms are visited in `(qubit, axis)`
/// order from a single RNG seeded with `seed`.
pub fn sample_expectation(
    circuit: &EncodingCircuit,
    obs: &PauliSumObservable,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    check_shots(shots)?;
    obs.validate(circuit.n_qubits())?;
    let state = apply_circuit(circuit);
    let mut rng = rng_from(seed);
    let mut estimate = obs.identity_coeff();
    for (q, p, b) in obs.terms() {
        if b == 0.0 {
            continue;
        }
        let p_plus = plus_probability(state.pauli_expectation(q, p));
        estimate += b * binomial_estimate(&mut rng, shots, p_plus)?;
    }
    Ok(estimate)
}

/// Shot-sampled estimate under [`NoiseModel`].
///
/// A random Pauli after a gate with probability `p` is the depolarizing
/// channel, which shrinks the qubit's Bloch vector by `1 − 4p/3` and
/// commutes with the gates. The encoding circuits contain only
/// single-qubit gates, so a term on qubit `q` has noiseless expectation
/// times `(1 − 4p/3)^g`, `g` the number of gates on `q`. Shots are
/// independent, so the `+1` count is binomial in that probability after
/// the readout flip; this is the same count distribution as simulating
/// each shot's error pattern.
///
/// With both probabilities zero the draws coincide with
/// [`sample_expectation`] for the same seed.
pub fn sample_noisy_expectation(
    circuit: &EncodingCircuit,
    obs: &PauliSumObservable,
    noise: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    check_shots(shots)?;
    noise.validate()?;
    obs.validate(circuit.n_qubits())?;
    let state = apply_circuit(circuit);
    let mut rng = rng_from(seed);
    let mut estimate = obs.identity_coeff();
    let shrink = 1.0 - 4.0 * noise.depolarizing_prob / 3.0;
    for (q, p, b) in obs.terms() {
        if b == 0.0 {
            continue;
        }
        let damping = shrink.powi(circuit.gates_on(q).len() as i32);
        let p_plus = plus_probability(damping * state.pauli_expectation(q, p));
        let p_read = with_readout_error(p_plus, noise.readout_flip_prob);
        estimate += b * binomial_estimate(&mut rng, shots, p_read)?;
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{build_feature_map, expectation, pauli_matrix, variance, Gate, Mat2, Pauli};
    use num_complex::Complex64;

    fn z0() -> PauliSumObservable {
        PauliSumObservable::new(0.0).with_term(0, Pauli::Z, 1.0)
    }

    #[test]
    fn zero_shots_rejected() {
        let c = build_feature_map(&[0.1], 1, None).unwrap();
        assert!(sample_expectation(&c, &z0(), 0, 1).is_err());
        assert!(sample_noisy_expectation(&c, &z0(), &NoiseModel::noiseless(), 0, 1).is_err());
    }

    #[test]
    fn eigenstate_is_sampled_exactly() {
        let c = EncodingCircuit::bare(2, 1);
        let obs = z0().with_term(1, Pauli::Z, -0.5);
        for shots in [1, 7, 1024] {
            assert_eq!(sample_expectation(&c, &obs, shots, 3).unwrap(), 0.5);
        }
    }

    #[test]
    fn converges_with_many_shots() {
        let c = build_feature_map(&[0.3, 1.1], 1, Some(&[0.2, 0.4, -0.3, 0.9])).unwrap();
        let obs = PauliSumObservable::summed_paulis(0.2, &[0.3, -0.2, 0.5, 0.1, 0.4, -0.6])
            .unwrap();
        let exact = expectation(&apply_circuit(&c), &obs).unwrap();
        let est = sample_expectation(&c, &obs, 10_000_000, 11).unwrap();
        assert!((est - exact).abs() < 2e-3, "{est} vs {exact}");
    }

    #[test]
    fn deterministic_per_seed() {
        let c = build_feature_map(&[0.3, 1.1], 1, None).unwrap();
        let obs = PauliSumObservable::summed_paulis(0.0, &[0.3, -0.2, 0.5, 0.1, 0.4, -0.6])
            .unwrap();
        let a = sample_expectation(&c, &obs, 1024, 5).unwrap();
        assert_eq!(a.to_bits(), sample_expectation(&c, &obs, 1024, 5).unwrap().to_bits());
        assert_ne!(a, sample_expectation(&c, &obs, 1024, 6).unwrap());
        let noise = NoiseModel::new(0.05, 0.02).unwrap();
        let b = sample_noisy_expectation(&c, &obs, &noise, 256, 5).unwrap();
        assert_eq!(
            b.to_bits(),
            sample_noisy_expectation(&c, &obs, &noise, 256, 5).unwrap().to_bits()
        );
    }

    #[test]
    fn noiseless_model_matches_plain_sampling() {
        let c = build_feature_map(&[0.3, 1.1, 2.0], 1, None).unwrap();
        let obs = PauliSumObservable::summed_paulis(
            0.1,
            &[0.3, -0.2, 0.5, 0.1, 0.4, -0.6, 0.7, 0.0, 0.2],
        )
        .unwrap();
        for seed in 0..10 {
            assert_eq!(
                sample_expectation(&c, &obs, 1024, seed).unwrap(),
                sample_noisy_expectation(&c, &obs, &NoiseModel::noiseless(), 1024, seed)
                    .unwrap()
            );
        }
    }

    #[test]
    fn symmetric_readout_destroys_signal() {
        let c = EncodingCircuit::bare(1, 1);
        let noise = NoiseModel::new(0.0, 0.5).unwrap();
        let est = sample_noisy_expectation(&c, &z0(), &noise, 1_000_000, 9).unwrap();
        assert!(est.abs() < 5e-3, "{est}");
    }

    #[test]
    fn depolarizing_attenuates_monotonically() {
        // H then a zero phase: noiseless ⟨X⟩ = 1. A uniformly random Pauli
        // with probability p after each of the two gates shrinks the Bloch
        // vector by (1 − 4p/3)².
        let c = build_feature_map(&[0.0], 1, None).unwrap();
        let x0 = PauliSumObservable::new(0.0).with_term(0, Pauli::X, 1.0);
        let mut last = f64::INFINITY;
        for p in [0.0, 0.05, 0.2] {
            let noise = NoiseModel::new(p, 0.0).unwrap();
            let est = sample_noisy_expectation(&c, &x0, &noise, 1_000_000, 17).unwrap();
            let oracle = (1.0 - 4.0 * p / 3.0).powi(2);
            assert!((est - oracle).abs() < 4e-3, "p={p}: {est} vs {oracle}");
            assert!(est.abs() <= last);
            last = est.abs();
        }
    }

    /// One shot with explicit error draws after every gate.
    fn trajectory_shot<R: Rng>(gates: &[Mat2], p: Pauli, noise: &NoiseModel, rng: &mut R) -> bool {
        let mut a = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let apply = |m: &Mat2, a: [Complex64; 2]| [m[0][0] * a[0] + m[0][1] * a[1], m[1][0] * a[0] + m[1][1] * a[1]];
        for g in gates {
            a = apply(g, a);
            if rng.random::<f64>() < noise.depolarizing_prob {
                a = apply(&pauli_matrix(Pauli::ALL[rng.random_range(0..3)]), a);
            }
        }
        let e = match p {
            Pauli::Z => a[0].norm_sqr() - a[1].norm_sqr(),
            Pauli::X => 2.0 * (a[0].conj() * a[1]).re,
            Pauli::Y => 2.0 * (a[0].conj() * a[1]).im,
        };
        let outcome = rng.random::<f64>() < (1.0 + e) / 2.0;
        outcome ^ (rng.random::<f64>() < noise.readout_flip_prob)
    }

    #[test]
    fn closed_form_matches_trajectories() {
        let c = build_feature_map(&[0.7, 1.3], 2, Some(&[0.3, -0.8, 0.5, 0.6, -1.1, 0.2, 0.9, 0.4])).unwrap();
        let noise = NoiseModel::new(0.07, 0.03).unwrap();
        let mut rng = rng_from(23);
        let shots = 400_000;
        for (q, p) in [(0, Pauli::X), (1, Pauli::Y), (1, Pauli::Z)] {
            let gates: Vec<Mat2> = c.gates_on(q).iter().map(Gate::matrix).collect();
            let plus = (0..shots).filter(|_| trajectory_shot(&gates, p, &noise, &mut rng)).count();
            let traj = 2.0 * plus as f64 / shots as f64 - 1.0;
            let obs = PauliSumObservable::new(0.0).with_term(q, p, 1.0);
            let closed = sample_noisy_expectation(&c, &obs, &noise, 100_000_000, 1).unwrap();
            // Trajectory standard error is at most 1/sqrt(shots) ≈ 1.6e-3.
            assert!((traj - closed).abs() < 7e-3, "{q} {p:?}: {traj} vs {closed}");
        }
    }

    #[test]
    fn sampling_std_follows_shot_noise_law() {
        let c = build_feature_map(&[0.4, 1.2], 1, Some(&[0.3, 0.8, -0.5, 0.6])).unwrap();
        let obs = PauliSumObservable::new(0.1)
            .with_term(0, Pauli::X, 0.7)
            .with_term(1, Pauli::Z, -0.4);
        let sigma2 = variance(&apply_circuit(&c), &obs).unwrap();
        let reps = 400;
        let ests: Vec<f64> = (0..reps)
            .map(|s| sample_expectation(&c, &obs, 1024, s).unwrap())
            .collect();
        let sd = crate::stats::sample_sd(&ests);
        let law = (sigma2 / 1024.0).sqrt();
        assert!((sd / law - 1.0).abs() < 0.15, "{sd} vs {law}");
    }
}
