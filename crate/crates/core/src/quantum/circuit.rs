use crate::error::{invalid, Error, Result};

use super::state::{Gate, Statevector};

/// Angle-encoding circuit with optional data re-uploading and an optional
/// trainable rotation block.
///
/// Each layer applies `H` to every qubit, then `exp(+i·x_q·Z_q)` on qubit
/// `q`, then (when variational angles are present) `RZ` followed by `RY` on
/// every qubit. Variational angles are laid out layer-major, then by qubit,
/// then `(rz, ry)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingCircuit {
    n_qubits: usize,
    layers: usize,
    feature_angles: Vec<f64>,
    variational_angles: Option<Vec<f64>>,
    hadamard: bool,
}

/// Number of variational angles for a circuit shape.
pub fn variational_len(n_qubits: usize, layers: usize) -> usize {
    2 * n_qubits * layers
}

/// Builds the feature-map circuit for one input row.
pub fn build_feature_map(
    x: &[f64],
    layers: usize,
    variational: Option<&[f64]>,
) -> Result<EncodingCircuit> {
    if x.is_empty() {
        return Err(invalid("feature map needs at least one feature"));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(invalid(format!("feature {i} is not finite")));
    }
    if layers == 0 {
        return Err(invalid("feature map needs at least one layer"));
    }
    if let Some(v) = variational {
        let expected = variational_len(x.len(), layers);
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "variational angles",
                expected,
                got: v.len(),
            });
        }
        if v.iter().any(|a| !a.is_finite()) {
            return Err(invalid("variational angle is not finite"));
        }
    }
    Ok(EncodingCircuit {
        n_qubits: x.len(),
        layers,
        feature_angles: x.to_vec(),
        variational_angles: variational.map(<[f64]>::to_vec),
        hadamard: true,
    })
}

impl EncodingCircuit {
    /// Degenerate circuit with no Hadamards and all-zero angles; prepares
    /// `|0…0⟩`. Used as a test fixture.
    pub fn bare(n_qubits: usize, layers: usize) -> Self {
        Self {
            n_qubits,
            layers,
            feature_angles: vec![0.0; n_qubits],
            variational_angles: None,
            hadamard: false,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn feature_angles(&self) -> &[f64] {
        &self.feature_angles
    }

    pub fn variational_angles(&self) -> Option<&[f64]> {
        self.variational_angles.as_deref()
    }

    /// The gate sequence in application order.
    pub fn gates(&self) -> Vec<Gate> {
        let n = self.n_qubits;
        let mut gates = Vec::with_capacity(self.layers * n * 4);
        for layer in 0..self.layers {
            if self.hadamard {
                gates.extend((0..n).map(Gate::Hadamard));
            }
            gates.extend(
                self.feature_angles
                    .iter()
                    .enumerate()
                    .map(|(q, &x)| Gate::ZPhase(q, x)),
            );
            if let Some(v) = &self.variational_angles {
                for q in 0..n {
                    let k = 2 * (layer * n + q);
                    gates.push(Gate::Rz(q, v[k]));
                    gates.push(Gate::Ry(q, v[k + 1]));
                }
            }
        }
        gates
    }

    /// Gates touching `qubit`, in order. Every gate is single-qubit, so this
    /// sequence fully determines the qubit's reduced state.
    pub fn gates_on(&self, qubit: usize) -> Vec<Gate> {
        self.gates()
            .into_iter()
            .filter(|g| g.qubit() == qubit)
            .collect()
    }
}

/// Runs the circuit on `|0…0⟩`.
pub fn apply_circuit(circuit: &EncodingCircuit) -> Statevector {
    let mut state = Statevector::zero(circuit.n_qubits);
    for gate in circuit.gates() {
        state.apply(&gate);
    }
    state
}
