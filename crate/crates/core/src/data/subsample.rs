use rand::seq::index;

use crate::error::{invalid, Result};
use crate::rng::{derived_rng, stream};

/// Simple random sample of `size` subjects without replacement, stratified
/// by treatment so both arms keep their share (at least one subject each).
/// Returned indices are ascending.
pub fn stratified_subsample(z: &[f64], size: usize, seed: u64) -> Result<Vec<usize>> {
    let treated: Vec<usize> = (0..z.len()).filter(|&i| z[i] == 1.0).collect();
    let control: Vec<usize> = (0..z.len()).filter(|&i| z[i] == 0.0).collect();
    if treated.len() + control.len() != z.len() {
        return Err(invalid("treatment must be 0 or 1"));
    }
    if size >= z.len() {
        return Ok((0..z.len()).collect());
    }
    if treated.is_empty() || control.is_empty() || size < 2 {
        return Err(invalid("stratified subsample needs both arms and size >= 2"));
    }
    let share = treated.len() as f64 / z.len() as f64;
    let n1 = ((size as f64 * share).round() as usize).clamp(1, size - 1);
    let n1 = n1.min(treated.len()).max(size.saturating_sub(control.len()));
    let n0 = size - n1;
    let mut rng = derived_rng(seed, stream::SUBSAMPLE, 0);
    let mut picked: Vec<usize> = index::sample(&mut rng, treated.len(), n1)
        .into_iter()
        .map(|k| treated[k])
        .chain(index::sample(&mut rng, control.len(), n0).into_iter().map(|k| control[k]))
        .collect();
    picked.sort_unstable();
    Ok(picked)
}
