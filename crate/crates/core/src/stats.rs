//! Small statistical helpers shared by the balance tests and the survival
//! models: reference-distribution tails and weighted moments.

use statrs::function::{beta::beta_reg, erf::erfc, gamma::gamma_ur};

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Upper tail `P(X >= stat)` of a chi-square distribution with `df` degrees
/// of freedom.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    if !stat.is_finite() {
        return 0.0;
    }
    gamma_ur(df / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// Two-sided p-value of a Student t statistic, evaluated through the
/// regularized incomplete beta so tiny tails do not cancel to zero early.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Weighted mean and reliability-weighted variance.
///
/// The variance uses the `Σw - Σw²/Σw` denominator, which reduces to the
/// ordinary `n - 1` sample variance for unit weights.
pub fn weighted_moments(xs: &[f64], ws: &[f64]) -> (f64, f64) {
    let sw: f64 = ws.iter().sum();
    let sw2: f64 = ws.iter().map(|w| w * w).sum();
    let m = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ss: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - m) * (x - m)).sum();
    let denom = sw - sw2 / sw;
    let var = if denom > 0.0 { ss / denom } else { 0.0 };
    (m, var)
}

/// Kish effective sample size `(Σw)² / Σw²`.
pub fn effective_n(ws: &[f64]) -> f64 {
    let sw: f64 = ws.iter().sum();
    let sw2: f64 = ws.iter().map(|w| w * w).sum();
    sw * sw / sw2
}
