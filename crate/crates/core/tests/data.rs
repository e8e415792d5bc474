use proptest::prelude::*;
use qpsa::adjust::smd;
use qpsa::data::{
    encode_features, generate_synthetic_cohort, load_cohort, read_cohort, save_cohort, CohortSchema, EncodingMethod,
    SynthConfig, SYNTH_COLUMNS,
};
use qpsa::survival::{log_rank, samples_from_cohort};
use qpsa::Error;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip_is_exact(seed in any::<u64>(), n in 20usize..120) {
        let s = generate_synthetic_cohort(&SynthConfig { n, seed, ..SynthConfig::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cohort.csv");
        save_cohort(&s.cohort, &path).unwrap();
        let (back, report) = load_cohort(&path, &CohortSchema::colorectal()).unwrap();
        prop_assert_eq!(report.rows_read, n);
        prop_assert_eq!(&back, &s.cohort);
    }

    #[test]
    fn encoded_features_stay_in_range(seed in any::<u64>()) {
        let s = generate_synthetic_cohort(&SynthConfig { n: 60, seed, ..SynthConfig::default() }).unwrap();
        for method in [EncodingMethod::MinMaxPi, EncodingMethod::MinMaxHalfPi] {
            let (m, enc) = encode_features(&s.cohort, &["Age", "BMI", "Stage"], method).unwrap();
            for row in &m {
                prop_assert!(row.iter().all(|&v| (0.0..=method.upper()).contains(&v)));
            }
            let raw = s.cohort.column("Age").unwrap();
            let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(enc.encode_row(&[lo, 27.0, 2.0]).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn synthetic_values_respect_schema(seed in any::<u64>()) {
        let s = generate_synthetic_cohort(&SynthConfig { n: 100, seed, ..SynthConfig::default() }).unwrap();
        let schema = CohortSchema::colorectal();
        for row in s.cohort.rows() {
            for (c, v) in SYNTH_COLUMNS.iter().zip(row) {
                prop_assert!(schema.get(c).unwrap().violation(*v).is_none(), "{} = {}", c, v);
            }
        }
        prop_assert!(s.true_propensity.iter().all(|&e| e > 0.0 && e < 1.0));
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = SynthConfig { n: 200, seed: 42, ..SynthConfig::default() };
    assert_eq!(generate_synthetic_cohort(&cfg).unwrap(), generate_synthetic_cohort(&cfg).unwrap());
}

#[test]
fn without_confounding_arms_are_balanced() {
    let cfg = SynthConfig { n: 20_000, stage_effect: 0.0, sex_effect: 0.0, seed: 3, ..SynthConfig::default() };
    let s = generate_synthetic_cohort(&cfg).unwrap();
    let z = s.cohort.treatment().unwrap();
    for c in ["Age", "Sex", "BMI", "ASA", "Stage"] {
        let d = smd(&s.cohort.column(c).unwrap(), &z, None).unwrap();
        assert!(d.abs() < 0.05, "{c}: {d}");
    }
}

#[test]
fn default_cohort_is_confounded_by_stage() {
    let s = generate_synthetic_cohort(&SynthConfig { n: 5000, seed: 4, ..SynthConfig::default() }).unwrap();
    let z = s.cohort.treatment().unwrap();
    assert!(smd(&s.cohort.column("Stage").unwrap(), &z, None).unwrap() < -0.3);
}

#[test]
fn null_log_rank_rejection_rate() {
    let runs = 200;
    let mut rejected = 0;
    for seed in 0..runs {
        let cfg = SynthConfig { n: 200, stage_effect: 0.0, sex_effect: 0.0, seed, ..SynthConfig::default() };
        let s = generate_synthetic_cohort(&cfg).unwrap();
        if log_rank(&samples_from_cohort(&s.cohort, None, &[]).unwrap()).unwrap().p < 0.05 {
            rejected += 1;
        }
    }
    let rate = f64::from(rejected) / f64::from(runs as u32);
    assert!((0.01..=0.12).contains(&rate), "{rate}");
}

#[test]
fn loader_reports_drops_and_errors() {
    let schema = CohortSchema::colorectal();
    let text = "Age,Sex,Technique,Survival_Time,Event\n70,1,1,12,1\n65,NA,0,30,0\n80,0,2,5,1\n,1,0,3,1\n";
    let (c, r) = read_cohort(text.as_bytes(), &schema).unwrap();
    assert_eq!((c.len(), r.rows_read, r.dropped_missing, r.dropped_conversion), (1, 4, 2, 1));

    let bad = "Age,Sex\n70,1\n71,3\n";
    match read_cohort(bad.as_bytes(), &schema) {
        Err(Error::Record { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "Sex")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(read_cohort("Age,Shoe_Size\n1,2\n".as_bytes(), &schema), Err(Error::Schema(_))));
    assert!(matches!(read_cohort("Age\nold\n".as_bytes(), &schema), Err(Error::Record { row: 1, .. })));
}

#[test]
fn schema_text_round_trip() {
    let schema = CohortSchema::colorectal();
    assert_eq!(CohortSchema::parse(&schema.to_text()).unwrap(), schema);
    assert!(CohortSchema::parse("Age,continuous,10,5\n").is_err());
    assert!(CohortSchema::parse("Age,continuous,0,1\nAge,binary,0,1\n").is_err());
}
