use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::assignment::solve_assignment;
use super::balance_stats::check_z;
use crate::error::{invalid, Error, Result};
use crate::stats::sample_sd;

/// Maximum allowed `|ê_t − ê_c|` within a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Caliper {
    /// Multiple of the sample standard deviation of all propensities.
    SdMultiple(f64),
    Absolute(f64),
    None,
}

impl Default for Caliper {
    fn default() -> Self {
        Self::SdMultiple(0.25)
    }
}

impl Caliper {
    pub fn width(self, ps: &[f64]) -> f64 {
        match self {
            Self::SdMultiple(k) if ps.len() >= 2 => k * sample_sd(ps),
            Self::SdMultiple(_) => 0.0,
            Self::Absolute(w) => w,
            Self::None => f64::INFINITY,
        }
    }
}

/// 1:1 pairs without replacement. Indices refer to the full subject list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_treated: Vec<usize>,
    /// Caliper width applied (may be infinite).
    pub caliper: f64,
}

impl MatchSet {
    pub fn total_distance(&self, ps: &[f64]) -> f64 {
        self.pairs.iter().map(|&(t, c)| (ps[t] - ps[c]).abs()).sum()
    }

    /// Subject indices in the matched sample, treated then control.
    pub fn matched_indices(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .map(|p| p.0)
            .chain(self.pairs.iter().map(|p| p.1))
            .collect()
    }

    /// Checks the group, uniqueness and caliper invariants against `ps`
    /// and `z`.
    pub fn verify(&self, ps: &[f64], z: &[f64]) -> Result<()> {
        let mut seen = HashSet::new();
        for &(t, c) in &self.pairs {
            if t >= z.len() || c >= z.len() {
                return Err(invalid(format!("pair ({t}, {c}) indexes past {} subjects", z.len())));
            }
            if z[t] != 1.0 || z[c] != 0.0 {
                return Err(invalid(format!("pair ({t}, {c}) is not treated-control")));
            }
            if !seen.insert(t) || !seen.insert(c) {
                return Err(invalid(format!("pair ({t}, {c}) reuses a subject")));
            }
            if (ps[t] - ps[c]).abs() > self.caliper {
                return Err(invalid(format!("pair ({t}, {c}) violates the caliper")));
            }
        }
        for &t in &self.unmatched_treated {
            if !seen.insert(t) {
                return Err(invalid(format!("treated {t} is both matched and unmatched")));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_inputs(ps: &[f64], z: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    check_z(z, ps.len())?;
    if ps.iter().any(|e| !e.is_finite()) {
        return Err(invalid("propensity scores must be finite"));
    }
    let treated: Vec<usize> = (0..z.len()).filter(|&i| z[i] == 1.0).collect();
    let control: Vec<usize> = (0..z.len()).filter(|&i| z[i] == 0.0).collect();
    if treated.is_empty() || control.is_empty() {
        return Err(Error::Degenerate("matching needs both groups".into()));
    }
    Ok((treated, control))
}

/// Treated in descending propensity, ties by index.
pub(crate) fn treated_order(ps: &[f64], treated: &[usize]) -> Vec<usize> {
    let mut t = treated.to_vec();
    t.sort_by(|&a, &b| ps[b].total_cmp(&ps[a]).then(a.cmp(&b)));
    t
}

/// Greedy 1:1 matching: each treated (in `order`) takes the unused control
/// within the propensity caliper minimizing `dist`, ties to the lower
/// control index. Only controls inside the caliper window are scanned.
pub(crate) fn greedy_match(
    ps: &[f64],
    order: &[usize],
    control: &[usize],
    caliper: f64,
    mut dist: impl FnMut(usize, usize) -> f64,
) -> MatchSet {
    let mut sorted = control.to_vec();
    sorted.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]).then(a.cmp(&b)));
    let keys: Vec<f64> = sorted.iter().map(|&c| ps[c]).collect();
    let mut used = vec![false; sorted.len()];
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for &t in order {
        let lo = keys.partition_point(|&k| k < ps[t] - caliper);
        let hi = keys.partition_point(|&k| k <= ps[t] + caliper);
        let mut best: Option<(f64, usize, usize)> = None;
        for k in lo..hi {
            let c = sorted[k];
            if used[k] || (ps[t] - ps[c]).abs() > caliper {
                continue;
            }
            let d = dist(t, c);
            if best.is_none_or(|(bd, bc, _)| d < bd || (d == bd && c < bc)) {
                best = Some((d, c, k));
            }
        }
        match best {
            Some((_, c, k)) => {
                used[k] = true;
                pairs.push((t, c));
            }
            None => unmatched.push(t),
        }
    }
    MatchSet {
        pairs,
        unmatched_treated: unmatched,
        caliper,
    }
}

/// Greedy nearest-neighbor matching on the propensity score. Treated are
/// processed in descending `ê`.
pub fn nearest_neighbor_match(ps: &[f64], z: &[f64], caliper: Caliper) -> Result<MatchSet> {
    let (treated, control) = check_inputs(ps, z)?;
    let width = caliper.width(ps);
    Ok(greedy_match(ps, &treated_order(ps, &treated), &control, width, |t, c| {
        (ps[t] - ps[c]).abs()
    }))
}

/// Minimum total `|Δê|` 1:1 matching within the caliper.
///
/// Each treated also gets a private dummy control whose cost exceeds any
/// sum of real distances, so the solution first maximizes the number of
/// caliper-respecting pairs and then minimizes their total distance.
pub fn optimal_match(ps: &[f64], z: &[f64], caliper: Caliper) -> Result<MatchSet> {
    let (treated, control) = check_inputs(ps, z)?;
    let width = caliper.width(ps);
    let nt = treated.len();
    let dummy = nt as f64 + 1.0;
    let forbidden = 2.0 * dummy;
    let cost: Vec<Vec<f64>> = treated
        .iter()
        .enumerate()
        .map(|(r, &t)| {
            let mut row: Vec<f64> = control
                .iter()
                .map(|&c| {
                    let d = (ps[t] - ps[c]).abs();
                    if d <= width {
                        d
                    } else {
                        forbidden
                    }
                })
                .collect();
            row.extend((0..nt).map(|k| if k == r { dummy } else { forbidden }));
            row
        })
        .collect();
    let assign = solve_assignment(&cost)?;
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (r, &j) in assign.iter().enumerate() {
        let t = treated[r];
        if j < control.len() && (ps[t] - ps[control[j]]).abs() <= width {
            pairs.push((t, control[j]));
        } else {
            unmatched.push(t);
        }
    }
    Ok(MatchSet {
        pairs,
        unmatched_treated: unmatched,
        caliper: width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_ranges_give_no_pairs() {
        let ps = [0.9, 0.95, 0.1, 0.12];
        let z = [1.0, 1.0, 0.0, 0.0];
        let m = nearest_neighbor_match(&ps, &z, Caliper::Absolute(0.1)).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_treated, vec![1, 0]);
        let o = optimal_match(&ps, &z, Caliper::Absolute(0.1)).unwrap();
        assert!(o.pairs.is_empty());
    }

    #[test]
    fn nearest_legal_neighbor() {
        let ps = [0.6, 0.59, 0.3];
        let z = [1.0, 0.0, 0.0];
        let m = nearest_neighbor_match(&ps, &z, Caliper::SdMultiple(0.25)).unwrap();
        assert_eq!(m.pairs, vec![(0, 1)]);
    }

    #[test]
    fn ties_go_to_lower_control_index() {
        let z = [1.0, 0.0, 0.0];
        let ps = [0.5, 0.75, 0.25];
        let m = nearest_neighbor_match(&ps, &z, Caliper::None).unwrap();
        assert_eq!(m.pairs, vec![(0, 1)]);
    }

    #[test]
    fn optimal_beats_greedy_on_crossing_pairs() {
        let ps = [0.50, 0.52, 0.51, 0.49];
        let z = [1.0, 1.0, 0.0, 0.0];
        let o = optimal_match(&ps, &z, Caliper::None).unwrap();
        assert!((o.total_distance(&ps) - 0.02).abs() < 1e-12);
        let mut pairs = o.pairs.clone();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 3), (1, 2)]);
        let g = nearest_neighbor_match(&ps, &z, Caliper::None).unwrap();
        assert!(o.total_distance(&ps) <= g.total_distance(&ps) + 1e-12);
        o.verify(&ps, &z).unwrap();
    }

    #[test]
    fn single_pair() {
        let ps = [0.4, 0.45];
        let o = optimal_match(&ps, &[1.0, 0.0], Caliper::Absolute(0.1)).unwrap();
        assert_eq!(o.pairs, vec![(0, 1)]);
    }

    #[test]
    fn verify_catches_violations() {
        let ps = [0.4, 0.9];
        let z = [1.0, 0.0];
        let bad = MatchSet {
            pairs: vec![(0, 1)],
            unmatched_treated: vec![],
            caliper: 0.1,
        };
        assert!(bad.verify(&ps, &z).is_err());
    }
}
