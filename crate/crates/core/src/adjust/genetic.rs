use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::balance_stats::is_dichotomous;
use super::matching::{check_inputs, greedy_match, treated_order, Caliper, MatchSet};
use crate::error::{invalid, Error, Result};
use crate::rng::{derived_rng, stream};
use crate::stats::{mean, sample_sd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    /// Per-gene probability of taking the second parent's value.
    pub crossover_rate: f64,
    /// Standard deviation of the log-normal mutation factor.
    pub mutation_sigma: f64,
    pub caliper: Caliper,
    pub seed: u64,
}

impl GeneticConfig {
    pub fn new(population: usize, seed: u64) -> Self {
        Self {
            population,
            generations: 30,
            tournament: 3,
            crossover_rate: 0.5,
            mutation_sigma: 0.2,
            caliper: Caliper::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneticOutcome {
    pub matches: MatchSet,
    /// Distance weights on the standardized covariates, then on `ê`.
    pub weights: Vec<f64>,
    /// Mean |SMD| of the covariates in the returned match.
    pub fitness: f64,
    /// Best fitness after each generation (index 0 is the initial population).
    pub history: Vec<f64>,
}

struct Problem<'a> {
    ps: &'a [f64],
    /// Raw covariate columns for the fitness.
    columns: Vec<Vec<f64>>,
    dichotomous: Vec<bool>,
    /// Standardized columns, ê last, for the distance.
    features: Vec<Vec<f64>>,
    order: Vec<usize>,
    control: Vec<usize>,
    caliper: f64,
}

impl Problem<'_> {
    fn matched(&self, w: &[f64]) -> MatchSet {
        greedy_match(self.ps, &self.order, &self.control, self.caliper, |t, c| {
            self.features
                .iter()
                .zip(w)
                .map(|(f, wk)| wk * (f[t] - f[c]) * (f[t] - f[c]))
                .sum()
        })
    }

    /// Mean |SMD| over covariates on the matched sample.
    fn fitness(&self, m: &MatchSet) -> f64 {
        if m.pairs.len() < 2 {
            return f64::INFINITY;
        }
        let n = m.pairs.len() as f64;
        let mut total = 0.0;
        for (col, &binary) in self.columns.iter().zip(&self.dichotomous) {
            let xt: Vec<f64> = m.pairs.iter().map(|p| col[p.0]).collect();
            let xc: Vec<f64> = m.pairs.iter().map(|p| col[p.1]).collect();
            let (mt, mc) = (mean(&xt), mean(&xc));
            let (vt, vc) = if binary {
                (mt * (1.0 - mt), mc * (1.0 - mc))
            } else {
                let sd = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
                (sd(&xt, mt), sd(&xc, mc))
            };
            let pooled = ((vt + vc) / 2.0).sqrt();
            total += if pooled > 0.0 {
                ((mt - mc) / pooled).abs()
            } else if mt == mc {
                0.0
            } else {
                f64::INFINITY
            };
        }
        total / self.columns.len() as f64
    }

    fn evaluate(&self, w: &[f64]) -> f64 {
        self.fitness(&self.matched(w))
    }
}

fn standardize(col: &[f64]) -> Vec<f64> {
    let m = mean(col);
    let sd = sample_sd(col);
    if sd > 0.0 && sd.is_finite() {
        col.iter().map(|v| (v - m) / sd).collect()
    } else {
        vec![0.0; col.len()]
    }
}

/// Genetic search over diagonal distance weights for 1:1 matching.
///
/// Candidates weight the standardized covariates and the propensity score;
/// each candidate's match is the greedy nearest-neighbor match in its
/// weighted distance, restricted to the propensity caliper, and its fitness
/// is the mean |SMD| of the covariates in that match. The unit-weight
/// candidate is always in the initial population and the best candidate is
/// carried over unchanged, so the result is never worse than it.
pub fn genetic_match(
    covariates: &[Vec<f64>],
    z: &[f64],
    ps: &[f64],
    config: &GeneticConfig,
) -> Result<GeneticOutcome> {
    if config.population < 4 {
        return Err(invalid(format!("population must be at least 4, got {}", config.population)));
    }
    if config.tournament == 0 || !(0.0..=1.0).contains(&config.crossover_rate) || config.mutation_sigma < 0.0 {
        return Err(invalid("bad genetic operator settings"));
    }
    let (treated, control) = check_inputs(ps, z)?;
    if covariates.len() != ps.len() {
        return Err(Error::DimensionMismatch {
            context: "covariate rows",
            expected: ps.len(),
            got: covariates.len(),
        });
    }
    let k = covariates.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(invalid("genetic matching needs at least one covariate"));
    }
    if covariates.iter().any(|r| r.len() != k) {
        return Err(invalid("covariate rows differ in width"));
    }
    let columns: Vec<Vec<f64>> = (0..k).map(|j| covariates.iter().map(|r| r[j]).collect()).collect();
    let mut features: Vec<Vec<f64>> = columns.iter().map(|c| standardize(c)).collect();
    features.push(standardize(ps));
    let problem = Problem {
        ps,
        dichotomous: columns.iter().map(|c| is_dichotomous(c)).collect(),
        columns,
        features,
        order: treated_order(ps, &treated),
        control,
        caliper: config.caliper.width(ps),
    };

    let genes = k + 1;
    let mut rng = derived_rng(config.seed, stream::GENETIC, 0);
    let init = Normal::new(0.0, 1.0).expect("valid normal");
    let mutation = Normal::new(0.0, config.mutation_sigma).expect("valid normal");
    let mut pop: Vec<Vec<f64>> = vec![vec![1.0; genes]];
    while pop.len() < config.population {
        pop.push((0..genes).map(|_| f64::exp(init.sample(&mut rng))).collect());
    }
    let mut fit: Vec<f64> = pop.par_iter().map(|w| problem.evaluate(w)).collect();
    let best_of = |fit: &[f64]| {
        (0..fit.len())
            .min_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)))
            .expect("non-empty population")
    };
    let mut history = vec![fit[best_of(&fit)]];

    for _ in 0..config.generations {
        let elite = best_of(&fit);
        let mut next = vec![pop[elite].clone()];
        let tournament = |rng: &mut rand_chacha::ChaCha8Rng| {
            (0..config.tournament)
                .map(|_| rng.random_range(0..pop.len()))
                .min_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)))
                .expect("tournament size >= 1")
        };
        while next.len() < config.population {
            let (a, b) = (tournament(&mut rng), tournament(&mut rng));
            let child: Vec<f64> = (0..genes)
                .map(|g| {
                    let gene = if rng.random::<f64>() < config.crossover_rate { pop[b][g] } else { pop[a][g] };
                    gene * mutation.sample(&mut rng).exp()
                })
                .collect();
            next.push(child);
        }
        let elite_fit = fit[elite];
        let mut next_fit: Vec<f64> = next[1..].par_iter().map(|w| problem.evaluate(w)).collect();
        next_fit.insert(0, elite_fit);
        pop = next;
        fit = next_fit;
        history.push(fit[best_of(&fit)]);
    }

    let best = best_of(&fit);
    Ok(GeneticOutcome {
        matches: problem.matched(&pop[best]),
        weights: pop[best].clone(),
        fitness: fit[best],
        history,
    })
}
