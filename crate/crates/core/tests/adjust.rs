use proptest::prelude::*;
use qpsa::adjust::{
    chi_square_test, compute_weights, genetic_match, nearest_neighbor_match, optimal_match, smd,
    solve_assignment, two_sample_t_test, Caliper, GeneticConfig, MatchSet, WeightScheme,
};
use qpsa::rng::rng_from;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn ps_and_z() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((0.02..0.98f64, any::<bool>()), 4..40)
        .prop_filter("both arms", |v| v.iter().any(|t| t.1) && v.iter().any(|t| !t.1))
        .prop_map(|v| v.into_iter().map(|(p, z)| (p, f64::from(z))).unzip())
}

fn caliper() -> impl Strategy<Value = Caliper> {
    prop_oneof![
        Just(Caliper::None),
        (0.01..0.5f64).prop_map(Caliper::SdMultiple),
        (0.01..0.3f64).prop_map(Caliper::Absolute),
    ]
}

fn check_partition(m: &MatchSet, z: &[f64]) {
    let treated = z.iter().filter(|&&v| v == 1.0).count();
    assert_eq!(m.pairs.len() + m.unmatched_treated.len(), treated);
}

/// Minimum-cost assignment by enumerating every injective row→column map.
fn brute_force(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == cost.len() {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(cost[row][j] + go(cost, row + 1, used));
                used[j] = false;
            }
        }
        best
    }
    go(cost, 0, &mut vec![false; cost[0].len()])
}

proptest! {
    #[test]
    fn matches_respect_invariants((ps, z) in ps_and_z(), cal in caliper()) {
        for m in [nearest_neighbor_match(&ps, &z, cal).unwrap(), optimal_match(&ps, &z, cal).unwrap()] {
            prop_assert!(m.verify(&ps, &z).is_ok());
            check_partition(&m, &z);
        }
    }

    #[test]
    fn optimal_dominates_greedy((ps, z) in ps_and_z(), cal in caliper()) {
        let g = nearest_neighbor_match(&ps, &z, cal).unwrap();
        let o = optimal_match(&ps, &z, cal).unwrap();
        prop_assert!(o.pairs.len() >= g.pairs.len());
        if o.pairs.len() == g.pairs.len() {
            prop_assert!(o.total_distance(&ps) <= g.total_distance(&ps) + 1e-12);
        }
    }

    #[test]
    fn hungarian_matches_enumeration(rows in 1usize..5, extra in 0usize..3, seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let cost: Vec<Vec<f64>> = (0..rows).map(|_| (0..rows + extra).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let assign = solve_assignment(&cost).unwrap();
        let total: f64 = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        prop_assert!((total - brute_force(&cost)).abs() < 1e-9);
        let mut cols = assign.clone();
        cols.sort_unstable();
        cols.dedup();
        prop_assert_eq!(cols.len(), rows);
    }

    #[test]
    fn label_swap_flips_smd_and_keeps_p(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let n = 40;
        let z: Vec<f64> = (0..n).map(|i| f64::from(i % 3 == 0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let cat: Vec<f64> = (0..n).map(|_| rng.random_range(0..3) as f64).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let swapped: Vec<f64> = z.iter().map(|v| 1.0 - v).collect();
        for weights in [None, Some(w.as_slice())] {
            let a = smd(&x, &z, weights).unwrap();
            let b = smd(&x, &swapped, weights).unwrap();
            prop_assert!((a + b).abs() < 1e-12);
            let t1 = two_sample_t_test(&x, &z, weights).unwrap();
            let t2 = two_sample_t_test(&x, &swapped, weights).unwrap();
            prop_assert!((t1.p - t2.p).abs() < 1e-12);
            let c1 = chi_square_test(&cat, &z, weights).unwrap();
            let c2 = chi_square_test(&cat, &swapped, weights).unwrap();
            prop_assert!((c1.statistic - c2.statistic).abs() < 1e-9);
        }
    }

    #[test]
    fn overlap_weights_balance_logistic_covariates(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let n = 300;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), f64::from(rng.random_bool(0.4))]).collect();
        let z: Vec<f64> = x.iter().map(|r| f64::from(rng.random::<f64>() < logistic(0.8 * r[0] - 0.6 * r[1]))).collect();
        prop_assume!(z.iter().sum::<f64>() > 20.0 && z.iter().sum::<f64>() < 280.0);
        let m = qpsa::classical::fit_logistic(&x, &z, 100, 1e-12).unwrap();
        let ps: Vec<f64> = x.iter().map(|r| qpsa::classical::predict_logistic(&m, r).unwrap()).collect();
        let w = compute_weights(&ps, &z, WeightScheme::Overlap).unwrap().weights;
        for j in 0..2 {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            prop_assert!(smd(&col, &z, Some(&w)).unwrap().abs() < 1e-8);
        }
    }
}

#[test]
fn ipw_recovers_average_treatment_effect() {
    let mut rng = rng_from(5000);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 5000;
    let (mut num1, mut den1, mut num0, mut den0) = (0.0, 0.0, 0.0, 0.0);
    let mut naive = [(0.0, 0.0); 2];
    for _ in 0..n {
        let x: f64 = normal.sample(&mut rng);
        let e = logistic(1.2 * x);
        let z = f64::from(rng.random::<f64>() < e);
        let y = 2.0 * z + 1.5 * x + normal.sample(&mut rng);
        let w = compute_weights(&[e], &[z], WeightScheme::Ate).unwrap().weights[0];
        if z == 1.0 {
            num1 += w * y;
            den1 += w;
        } else {
            num0 += w * y;
            den0 += w;
        }
        naive[z as usize].0 += y;
        naive[z as usize].1 += 1.0;
    }
    let ate = num1 / den1 - num0 / den0;
    let raw = naive[1].0 / naive[1].1 - naive[0].0 / naive[0].1;
    assert!((ate - 2.0).abs() < 0.2, "ATE {ate}");
    assert!((raw - 2.0).abs() > 1.0, "confounded difference {raw}");
}

#[test]
fn t_test_detects_large_shift() {
    let mut rng = rng_from(7);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let x: Vec<f64> = (0..100).map(|i| normal.sample(&mut rng) + if i < 50 { 5.0 } else { 0.0 }).collect();
    let z: Vec<f64> = (0..100).map(|i| f64::from(i < 50)).collect();
    assert!(two_sample_t_test(&x, &z, None).unwrap().p < 1e-10);
}

fn genetic_cohort(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = rng_from(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = 150;
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![normal.sample(&mut rng), f64::from(rng.random_bool(0.5)), normal.sample(&mut rng)])
        .collect();
    let ps: Vec<f64> = x.iter().map(|r| logistic(0.7 * r[0] + 0.5 * r[1] - 0.4 * r[2] - 0.3)).collect();
    let z: Vec<f64> = ps.iter().map(|&e| f64::from(rng.random::<f64>() < e)).collect();
    (x, z, ps)
}

#[test]
fn genetic_search_only_improves() {
    for seed in 0..5 {
        let (x, z, ps) = genetic_cohort(seed);
        let out = genetic_match(&x, &z, &ps, &GeneticConfig { generations: 10, ..GeneticConfig::new(20, seed) }).unwrap();
        out.matches.verify(&ps, &z).unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.history.last().copied(), Some(out.fitness));
        let unit = genetic_match(&x, &z, &ps, &GeneticConfig { generations: 0, population: 4, ..GeneticConfig::new(4, seed) }).unwrap();
        assert!(out.fitness <= unit.history[0]);
    }
}

#[test]
fn larger_population_usually_balances_better() {
    let runs = 20;
    let mut better = 0;
    for seed in 0..runs {
        let (x, z, ps) = genetic_cohort(100 + seed);
        let small = genetic_match(&x, &z, &ps, &GeneticConfig::new(100, seed)).unwrap();
        let large = genetic_match(&x, &z, &ps, &GeneticConfig::new(400, seed)).unwrap();
        if large.fitness <= small.fitness {
            better += 1;
        }
    }
    assert!(better >= 14, "population 400 at least as good in {better}/{runs}");
}
