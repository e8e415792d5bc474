use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-qubit Pauli axis. The derived order `X < Y < Z` is the packing
/// order used for observable coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A 2x2 complex matrix acting on one qubit, row-major.
pub type Mat2 = [[Complex64; 2]; 2];

/// The single-qubit gates the encoding circuits are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    /// `exp(+i·angle·Z)`, the feature-map phase.
    ZPhase(usize, f64),
    /// `exp(-i·angle·Z/2)`.
    Rz(usize, f64),
    /// `exp(-i·angle·Y/2)`.
    Ry(usize, f64),
    Pauli(usize, Pauli),
}

impl Gate {
    pub fn qubit(&self) -> usize {
        match *self {
            Gate::Hadamard(q)
            | Gate::ZPhase(q, _)
            | Gate::Rz(q, _)
            | Gate::Ry(q, _)
            | Gate::Pauli(q, _) => q,
        }
    }

    pub fn matrix(&self) -> Mat2 {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            Gate::Hadamard(_) => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::ZPhase(_, x) => [
                [Complex64::from_polar(1.0, x), zero],
                [zero, Complex64::from_polar(1.0, -x)],
            ],
            Gate::Rz(_, t) => [
                [Complex64::from_polar(1.0, -t / 2.0), zero],
                [zero, Complex64::from_polar(1.0, t / 2.0)],
            ],
            Gate::Ry(_, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ]
            }
            Gate::Pauli(_, p) => pauli_matrix(p),
        }
    }
}

pub fn pauli_matrix(p: Pauli) -> Mat2 {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match p {
        Pauli::X => [[o, one], [one, o]],
        Pauli::Y => [[o, -i], [i, o]],
        Pauli::Z => [[one, o], [o, -one]],
    }
}

/// Dense pure state over `n_qubits` qubits. Qubit `q` is bit `q` of the
/// basis-state index (little-endian).
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// Wraps raw amplitudes, checking length and normalization.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                context: "statevector amplitudes",
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        let state = Self {
            n_qubits,
            amplitudes,
        };
        if (state.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "statevector not normalized: |ψ|² = {}",
                state.norm_sqr()
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply(&mut self, gate: &Gate) {
        self.apply_matrix(gate.qubit(), &gate.matrix());
    }

    pub fn apply_matrix(&mut self, qubit: usize, m: &Mat2) {
        let stride = 1usize << qubit;
        for base in 0..self.amplitudes.len() {
            if base & stride != 0 {
                continue;
            }
            let a0 = self.amplitudes[base];
            let a1 = self.amplitudes[base | stride];
            self.amplitudes[base] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[base | stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// `⟨P_q⟩` read directly from the amplitudes.
    pub fn pauli_expectation(&self, qubit: usize, pauli: Pauli) -> f64 {
        let stride = 1usize << qubit;
        let mut acc = 0.0;
        for base in 0..self.amplitudes.len() {
            match pauli {
                Pauli::Z => {
                    let p = self.amplitudes[base].norm_sqr();
                    acc += if base & stride == 0 { p } else { -p };
                }
                Pauli::X | Pauli::Y if base & stride == 0 => {
                    let c = self.amplitudes[base].conj() * self.amplitudes[base | stride];
                    acc += 2.0 * if pauli == Pauli::X { c.re } else { c.im };
                }
                _ => {}
            }
        }
        acc
    }
}
