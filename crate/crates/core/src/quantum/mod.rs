//! Dense statevector simulation of single-qubit angle-encoding circuits,
//! summed-Pauli observables, and shot/noise sampling.

mod circuit;
mod observable;
mod sampling;
mod state;

pub use circuit::{apply_circuit, build_feature_map, variational_len, EncodingCircuit};
pub use observable::{expectation, per_term_shot_variance, variance, PauliSumObservable};
pub use sampling::{sample_expectation, sample_noisy_expectation, NoiseModel};
pub use state::{pauli_matrix, Gate, Mat2, Pauli, Statevector};
