use proptest::prelude::*;
use qpsa::rng::rng_from;
use qpsa::survival::{
    concordance, fit_aalen, fit_cox, kaplan_meier, log_rank, AalenConfig, CoxConfig, SurvivalSample, Ties,
};
use rand::Rng;
use rand_distr::{Distribution, Exp};

fn samples() -> impl Strategy<Value = Vec<SurvivalSample>> {
    prop::collection::vec((1u32..30, any::<bool>(), 0u8..2, 0.2..3.0f64), 4..60).prop_map(|v| {
        v.into_iter()
            .map(|(t, e, g, w)| SurvivalSample::new(f64::from(t), e, g).with_weight(w))
            .collect()
    })
}

fn two_groups_with_events(s: &[SurvivalSample]) -> bool {
    s.iter().any(|x| x.group == 0) && s.iter().any(|x| x.group == 1) && s.iter().any(|x| x.event)
}

proptest! {
    #[test]
    fn km_is_a_survival_function(data in samples()) {
        let c = kaplan_meier(&data).unwrap();
        let mut last = 1.0;
        for (k, &s) in c.survival.iter().enumerate() {
            prop_assert!((0.0..=last + 1e-15).contains(&s));
            prop_assert!(c.events[k] <= c.at_risk[k] + 1e-12);
            last = s;
        }
        prop_assert!(c.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(c.at_risk.windows(2).all(|w| w[1] < w[0] + 1e-12));
    }

    #[test]
    fn km_ignores_common_weight_scale(data in samples(), k in 0.1..10.0f64) {
        let scaled: Vec<SurvivalSample> = data.iter().cloned().map(|s| { let w = s.weight * k; s.with_weight(w) }).collect();
        let (a, b) = (kaplan_meier(&data).unwrap(), kaplan_meier(&scaled).unwrap());
        prop_assert_eq!(&a.times, &b.times);
        for (x, y) in a.survival.iter().zip(&b.survival) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn log_rank_is_symmetric_in_labels(data in samples()) {
        prop_assume!(two_groups_with_events(&data));
        let swapped: Vec<SurvivalSample> = data.iter().cloned().map(|mut s| { s.group = 1 - s.group; s }).collect();
        let a = log_rank(&data);
        prop_assume!(a.is_ok());
        let (a, b) = (a.unwrap(), log_rank(&swapped).unwrap());
        prop_assert!((a.observed_minus_expected + b.observed_minus_expected).abs() < 1e-9);
        prop_assert!((a.variance - b.variance).abs() < 1e-9);
        prop_assert!((a.p - b.p).abs() < 1e-9);
    }
}

#[test]
fn km_without_censoring_is_empirical_survival() {
    let times = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let data: Vec<SurvivalSample> = times.iter().map(|&t| SurvivalSample::new(t, true, 0)).collect();
    let c = kaplan_meier(&data).unwrap();
    for t in [0.5, 1.0, 2.5, 4.0, 8.9, 9.0] {
        let ecdf = times.iter().filter(|&&s| s > t).count() as f64 / times.len() as f64;
        assert!((c.at(t) - ecdf).abs() < 1e-15, "t={t}");
    }
}

fn exp_cohort(seed: u64, n: usize, log_hr: f64) -> Vec<SurvivalSample> {
    let mut rng = rng_from(seed);
    let unit = Exp::new(1.0).unwrap();
    (0..n)
        .map(|i| {
            let g = (i % 2) as u8;
            let x: f64 = rng.random_range(-1.0..1.0);
            let t: f64 = unit.sample(&mut rng) / (log_hr * f64::from(g) + 0.5 * x).exp();
            let c: f64 = rng.random_range(0.0..3.0);
            SurvivalSample::new(t.min(c).max(1e-9), t <= c, g).with_covariates(vec![f64::from(g), x])
        })
        .collect()
}

#[test]
fn cox_rescaling_is_equivariant() {
    let data = exp_cohort(1, 300, 0.5);
    let a = fit_cox(&data, &CoxConfig::default()).unwrap();
    let scaled: Vec<SurvivalSample> = data
        .iter()
        .cloned()
        .map(|s| {
            let c = vec![s.covariates[0] * 4.0, s.covariates[1] * 0.1];
            s.with_covariates(c)
        })
        .collect();
    let b = fit_cox(&scaled, &CoxConfig::default()).unwrap();
    assert!((a.coefficients[0] - 4.0 * b.coefficients[0]).abs() < 1e-8);
    assert!((a.coefficients[1] - 0.1 * b.coefficients[1]).abs() < 1e-8);
    assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-8);
    for j in 0..2 {
        assert!((a.p_values[j] - b.p_values[j]).abs() < 1e-8);
    }
    assert_eq!(a.concordance, b.concordance);
}

#[test]
fn efron_and_breslow_differ_only_under_ties() {
    let data = exp_cohort(2, 200, 0.7);
    let tied: Vec<SurvivalSample> = data
        .iter()
        .cloned()
        .map(|mut s| {
            s.time = (s.time * 4.0).ceil() / 4.0;
            s
        })
        .collect();
    let e = fit_cox(&tied, &CoxConfig::default()).unwrap();
    let b = fit_cox(&tied, &CoxConfig { ties: Ties::Breslow, ..CoxConfig::default() }).unwrap();
    // Breslow shrinks coefficients toward zero under heavy ties.
    assert!(b.coefficients[0].abs() < e.coefficients[0].abs());
    assert!((b.coefficients[0] - e.coefficients[0]).abs() < 0.2);
}

#[test]
fn concordance_of_perfect_ranking() {
    let data: Vec<SurvivalSample> = (1..=6).map(|t| SurvivalSample::new(f64::from(t), true, 0)).collect();
    let risk: Vec<f64> = (1..=6).map(|t| -f64::from(t)).collect();
    assert_eq!(concordance(&risk, &data).unwrap(), 1.0);
    let reversed: Vec<f64> = risk.iter().map(|r| -r).collect();
    assert_eq!(concordance(&reversed, &data).unwrap(), 0.0);
}

#[test]
fn null_tests_hold_their_size() {
    let runs = 200;
    let (mut lr, mut cox) = (0, 0);
    for seed in 0..runs {
        let data = exp_cohort(1000 + seed, 120, 0.0);
        if log_rank(&data).unwrap().p < 0.05 {
            lr += 1;
        }
        let only_group: Vec<SurvivalSample> =
            data.iter().cloned().map(|s| { let g = vec![s.covariates[0]]; s.with_covariates(g) }).collect();
        if fit_cox(&only_group, &CoxConfig::default()).unwrap().p_values[0] < 0.05 {
            cox += 1;
        }
    }
    for (name, k) in [("log-rank", lr), ("Cox Wald", cox)] {
        let rate = f64::from(k) / runs as f64;
        assert!((0.01..=0.12).contains(&rate), "{name} rejection rate {rate}");
    }
}

#[test]
fn aalen_binary_covariate_splits_nelson_aalen() {
    let mut rng = rng_from(31);
    let mut data: Vec<SurvivalSample> = (0..80)
        .map(|i| {
            let g = (i % 2) as f64;
            SurvivalSample::new(rng.random_range(1..50) as f64, rng.random_bool(0.7), 0).with_covariates(vec![g])
        })
        .collect();
    // A long censored subject per arm keeps both arms at risk at every event.
    data.push(SurvivalSample::new(100.0, false, 0).with_covariates(vec![0.0]));
    data.push(SurvivalSample::new(100.0, false, 0).with_covariates(vec![1.0]));
    let m = fit_aalen(&data, &["x".to_string()], &AalenConfig::default()).unwrap();
    assert_eq!(m.used_event_times, m.total_event_times);
    let arm = |x: f64, upto: f64| -> f64 {
        m.times
            .iter()
            .filter(|&&t| t <= upto)
            .map(|&t| {
                let at_risk = data.iter().filter(|s| s.covariates[0] == x && s.time >= t).count() as f64;
                let deaths = data.iter().filter(|s| s.covariates[0] == x && s.time == t && s.event).count() as f64;
                deaths / at_risk
            })
            .sum()
    };
    for (k, &t) in m.times.iter().enumerate() {
        let b = &m.cumulative[k];
        assert!((b[0] - arm(0.0, t)).abs() < 1e-12);
        assert!((b[0] + b[1] - arm(1.0, t)).abs() < 1e-12);
    }
}
