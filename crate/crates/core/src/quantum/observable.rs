use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::state::{pauli_matrix, Pauli, Statevector};

/// `a·I + Σ b_{q,P} P_q` over single-qubit Paulis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PauliSumObservable {
    identity: f64,
    terms: BTreeMap<(usize, Pauli), f64>,
}

impl PauliSumObservable {
    pub fn new(identity: f64) -> Self {
        Self {
            identity,
            terms: BTreeMap::new(),
        }
    }

    /// Adds `coeff·P_q`, accumulating onto an existing term.
    pub fn with_term(mut self, qubit: usize, pauli: Pauli, coeff: f64) -> Self {
        *self.terms.entry((qubit, pauli)).or_insert(0.0) += coeff;
        self
    }

    /// Full observable with one coefficient per `(qubit, axis)` pair in
    /// packing order `(0,X), (0,Y), (0,Z), (1,X), …`.
    pub fn summed_paulis(identity: f64, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() % 3 != 0 {
            return Err(invalid("summed-Pauli coefficients must come in triples"));
        }
        let mut obs = Self::new(identity);
        for (k, &b) in coeffs.iter().enumerate() {
            obs.terms.insert((k / 3, Pauli::ALL[k % 3]), b);
        }
        Ok(obs)
    }

    pub fn identity_coeff(&self) -> f64 {
        self.identity
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, Pauli, f64)> + '_ {
        self.terms.iter().map(|(&(q, p), &b)| (q, p, b))
    }

    pub fn coefficient(&self, qubit: usize, pauli: Pauli) -> f64 {
        self.terms.get(&(qubit, pauli)).copied().unwrap_or(0.0)
    }

    /// Checks indices against a state width and that every coefficient is
    /// finite.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !self.identity.is_finite() {
            return Err(invalid("identity coefficient is not finite"));
        }
        for (q, p, b) in self.terms() {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            if !b.is_finite() {
                return Err(invalid(format!("coefficient of {}{q} is not finite", p.symbol())));
            }
        }
        Ok(())
    }

    /// `Ĉ|ψ⟩` as an (unnormalized) amplitude vector.
    fn apply_to(&self, state: &Statevector) -> Vec<Complex64> {
        let amps = state.amplitudes();
        let mut out: Vec<Complex64> = amps.iter().map(|a| a * self.identity).collect();
        for (q, p, b) in self.terms() {
            if b == 0.0 {
                continue;
            }
            let m = pauli_matrix(p);
            let stride = 1usize << q;
            for base in 0..amps.len() {
                if base & stride != 0 {
                    continue;
                }
                let (a0, a1) = (amps[base], amps[base | stride]);
                out[base] += (m[0][0] * a0 + m[0][1] * a1) * b;
                out[base | stride] += (m[1][0] * a0 + m[1][1] * a1) * b;
            }
        }
        out
    }
}

/// `⟨ψ|Ĉ|ψ⟩`.
pub fn expectation(state: &Statevector, obs: &PauliSumObservable) -> Result<f64> {
    obs.validate(state.n_qubits())?;
    Ok(obs.identity
        + obs
            .terms()
            .map(|(q, p, b)| b * state.pauli_expectation(q, p))
            .sum::<f64>())
}

/// `⟨ψ|Ĉ²|ψ⟩ − ⟨ψ|Ĉ|ψ⟩²`, computed as `‖Ĉψ‖² − ⟨ψ|Ĉψ⟩²` (Ĉ is Hermitian).
pub fn variance(state: &Statevector, obs: &PauliSumObservable) -> Result<f64> {
    obs.validate(state.n_qubits())?;
    let c_psi = obs.apply_to(state);
    let second: f64 = c_psi.iter().map(|a| a.norm_sqr()).sum();
    let first: f64 = state
        .amplitudes()
        .iter()
        .zip(&c_psi)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();
    Ok((second - first * first).max(0.0))
}

/// Variance of one shot of the per-term estimator used by
/// [`super::sample_expectation`]: `Σ b² (1 − ⟨P⟩²)`.
///
/// Equals [`variance`] whenever distinct terms are uncorrelated, e.g. for
/// product states with at most one Pauli axis per qubit.
pub fn per_term_shot_variance(state: &Statevector, obs: &PauliSumObservable) -> Result<f64> {
    obs.validate(state.n_qubits())?;
    Ok(obs
        .terms()
        .map(|(q, p, b)| {
            let e = state.pauli_expectation(q, p);
            b * b * (1.0 - e * e).max(0.0)
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply_circuit, build_feature_map};

    fn plus() -> Statevector {
        apply_circuit(&build_feature_map(&[0.0], 1, None).unwrap())
    }

    #[test]
    fn z_on_basis_and_plus_states() {
        let z = PauliSumObservable::new(0.0).with_term(0, Pauli::Z, 1.0);
        let zero = Statevector::zero(1);
        assert_eq!(expectation(&zero, &z).unwrap(), 1.0);
        assert_eq!(variance(&zero, &z).unwrap(), 0.0);
        assert!(expectation(&plus(), &z).unwrap().abs() < 1e-15);
        assert!((variance(&plus(), &z).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn affine_observable_scales_variance() {
        let obs = PauliSumObservable::new(0.5).with_term(0, Pauli::Z, 2.0);
        assert!((variance(&plus(), &obs).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn feature_map_x_expectation() {
        let s = apply_circuit(&build_feature_map(&[0.7], 1, None).unwrap());
        let x = PauliSumObservable::new(0.0).with_term(0, Pauli::X, 1.0);
        assert!((expectation(&s, &x).unwrap() - 1.4f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_qubit_is_rejected() {
        let obs = PauliSumObservable::new(0.0).with_term(3, Pauli::X, 1.0);
        assert!(matches!(
            expectation(&Statevector::zero(2), &obs),
            Err(Error::QubitOutOfRange { index: 3, .. })
        ));
        assert!(variance(&Statevector::zero(2), &obs).is_err());
    }

    #[test]
    fn same_qubit_anticommuting_terms() {
        // Bloch vector r on one qubit: Var(b·σ) = |b|² − (b·r)².
        let s = apply_circuit(&build_feature_map(&[0.3], 1, None).unwrap());
        let obs = PauliSumObservable::summed_paulis(0.1, &[0.4, -0.7, 0.2]).unwrap();
        let r = [
            s.pauli_expectation(0, Pauli::X),
            s.pauli_expectation(0, Pauli::Y),
            s.pauli_expectation(0, Pauli::Z),
        ];
        let b = [0.4, -0.7, 0.2];
        let dot: f64 = r.iter().zip(&b).map(|(a, c)| a * c).sum();
        let expected = b.iter().map(|c| c * c).sum::<f64>() - dot * dot;
        assert!((variance(&s, &obs).unwrap() - expected).abs() < 1e-13);
    }
}
