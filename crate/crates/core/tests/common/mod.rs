//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qpsa::quantum::Pauli;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Dense 2^n × 2^n matrix acting as `g` on qubit `q` (bit `q` of the index).
pub fn embed(g: [[C; 2]; 2], q: usize, n: usize) -> Vec<Vec<C>> {
    let dim = 1 << n;
    let mut u = vec![vec![c(0.0, 0.0); dim]; dim];
    for (i, row) in u.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if (i ^ j) & !(1 << q) == 0 {
                *v = g[(i >> q) & 1][(j >> q) & 1];
            }
        }
    }
    u
}

pub fn matmul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn hadamard() -> [[C; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
}

/// `exp(i·x·Z)`.
fn zphase(x: f64) -> [[C; 2]; 2] {
    [[C::from_polar(1.0, x), c(0.0, 0.0)], [c(0.0, 0.0), C::from_polar(1.0, -x)]]
}

/// `exp(−iθZ/2)`.
fn rz(t: f64) -> [[C; 2]; 2] {
    zphase(-t / 2.0)
}

/// `exp(−iθY/2)`.
fn ry(t: f64) -> [[C; 2]; 2] {
    let (s, co) = (t / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn pauli(p: Pauli) -> [[C; 2]; 2] {
    match p {
        Pauli::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        Pauli::Y => [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]],
        Pauli::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

/// Full circuit unitary: each layer is H on every qubit, then `exp(i x_q Z)`,
/// then optionally `RY(θ₂ₖ₊₁)·RZ(θ₂ₖ)` with `k = layer·n + q`.
pub fn circuit_unitary(x: &[f64], layers: usize, angles: Option<&[f64]>) -> Vec<Vec<C>> {
    let n = x.len();
    let dim = 1 << n;
    let mut u: Vec<Vec<C>> = (0..dim)
        .map(|i| (0..dim).map(|j| c(f64::from(u8::from(i == j)), 0.0)).collect())
        .collect();
    for l in 0..layers {
        for q in 0..n {
            u = matmul(&embed(hadamard(), q, n), &u);
        }
        for q in 0..n {
            u = matmul(&embed(zphase(x[q]), q, n), &u);
        }
        if let Some(a) = angles {
            for q in 0..n {
                let k = 2 * (l * n + q);
                u = matmul(&embed(rz(a[k]), q, n), &u);
                u = matmul(&embed(ry(a[k + 1]), q, n), &u);
            }
        }
    }
    u
}

/// `⟨0|U† O U|0⟩` for `O = a·I + Σ b P_q`.
pub fn dense_expectation(u: &[Vec<C>], identity: f64, terms: &[(usize, Pauli, f64)], n: usize) -> f64 {
    let dim = 1 << n;
    let psi: Vec<C> = (0..dim).map(|i| u[i][0]).collect();
    let mut o = vec![vec![c(0.0, 0.0); dim]; dim];
    for (i, row) in o.iter_mut().enumerate() {
        row[i] = c(identity, 0.0);
    }
    for &(q, p, b) in terms {
        let m = embed(pauli(p), q, n);
        for i in 0..dim {
            for j in 0..dim {
                o[i][j] += m[i][j] * b;
            }
        }
    }
    let mut acc = c(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            acc += psi[i].conj() * o[i][j] * psi[j];
        }
    }
    acc.re
}

/// Negative log-likelihood of a logistic model with intercept.
pub fn logistic_nll(rows: &[Vec<f64>], y: &[f64], beta: &[f64]) -> f64 {
    rows.iter()
        .zip(y)
        .map(|(x, &yi)| {
            let eta = beta[0] + x.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            (1.0 + eta.exp()).ln() - yi * eta
        })
        .sum()
}

/// Minimizer of a convex function of two variables by repeated grid zoom.
pub fn grid_minimize_2d(f: impl Fn(f64, f64) -> f64, mut center: (f64, f64), mut half: f64) -> (f64, f64) {
    while half > 1e-7 {
        let mut best = (f64::INFINITY, center);
        for i in -20..=20 {
            for j in -20..=20 {
                let p = (center.0 + half * i as f64 / 20.0, center.1 + half * j as f64 / 20.0);
                let v = f(p.0, p.1);
                if v < best.0 {
                    best = (v, p);
                }
            }
        }
        center = best.1;
        half /= 5.0;
    }
    center
}

/// Nelson–Aalen `Σ d_k / n_k` at each distinct event time, by brute force.
pub fn nelson_aalen(times: &[f64], events: &[bool]) -> Vec<(f64, f64)> {
    let mut ev: Vec<f64> = times.iter().zip(events).filter(|(_, &e)| e).map(|(&t, _)| t).collect();
    ev.sort_by(f64::total_cmp);
    ev.dedup();
    let mut h = 0.0;
    ev.into_iter()
        .map(|t| {
            let n = times.iter().filter(|&&s| s >= t).count() as f64;
            let d = times.iter().zip(events).filter(|(&s, &e)| e && s == t).count() as f64;
            h += d / n;
            (t, h)
        })
        .collect()
}
