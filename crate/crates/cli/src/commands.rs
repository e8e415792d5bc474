//! The five subcommands. Each writes its artifacts into `out_dir` and
//! returns the paths it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use qpsa::adjust::{
    balance_report, compute_weights, genetic_match, nearest_neighbor_match, optimal_match, Adjustment,
    BalanceReport, BalanceRow, Caliper, GeneticConfig, MatchSet, WeightScheme,
};
use qpsa::classical::{fit_gbm, fit_logistic, predict_gbm, predict_logistic, GbmConfig};
use qpsa::cmaes::CmaesConfig;
use qpsa::data::{
    feature_matrix, generate_synthetic_cohort, load_cohort, save_cohort, stratified_subsample, Cohort,
    CohortSchema, EncodingMethod, FeatureEncoder, SynthConfig, EVENT, TIME, TREATMENT,
};
use qpsa::metrics::{evaluate, roc_and_auc};
use qpsa::qnn::{self, clip_propensity, EvalMode, QnnConfig};
use qpsa::quantum::NoiseModel;
use qpsa::survival::{
    fit_aalen, fit_cox, kaplan_meier, log_rank, samples_from_cohort, AalenConfig, CoxConfig, SurvivalSample,
    Ties,
};

use crate::config::{AdjustMethod, Model, RunConfig};
use crate::io::{self, AdjustmentFile, CurveRecord, MatchRecord, RocRecord, ScoreRecord, WeightRecord};

/// How a command finished when it did not fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Matching kept no pairs; reports were still written.
    EmptyMatch,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::EmptyMatch => 2,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub files: Vec<PathBuf>,
}

fn ensure_distinct(inputs: &[&Path], outputs: &[PathBuf]) -> Result<()> {
    for i in inputs {
        let a = std::path::absolute(i)?;
        for o in outputs {
            if a == std::path::absolute(o)? {
                bail!("input {} would be overwritten by an output", i.display());
            }
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<Cohort> {
    let (cohort, report) = load_cohort(path, &CohortSchema::colorectal())
        .with_context(|| format!("data: loading cohort {}", path.display()))?;
    if report.dropped_missing + report.dropped_conversion > 0 {
        eprintln!(
            "note: {}: kept {} of {} rows ({} with missing values, {} conversions dropped)",
            path.display(),
            cohort.len(),
            report.rows_read,
            report.dropped_missing,
            report.dropped_conversion
        );
    }
    Ok(cohort)
}

/// Covariates used for propensity models and balance: the configured list,
/// or every cohort column except treatment, time and event.
pub fn features(cfg: &RunConfig, cohort: &Cohort) -> Vec<String> {
    if !cfg.features.is_empty() {
        return cfg.features.clone();
    }
    cohort
        .columns()
        .iter()
        .filter(|c| ![TREATMENT, TIME, EVENT].contains(&c.as_str()))
        .cloned()
        .collect()
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes `manifest.json`: seed, config hash, the config itself and the
/// SHA-256 of every listed output.
pub fn write_manifest(cfg: &RunConfig, command: &str, out_dir: &Path, files: &[PathBuf]) -> Result<PathBuf> {
    let mut outputs = BTreeMap::new();
    for f in files {
        let name = f.strip_prefix(out_dir).unwrap_or(f).display().to_string();
        outputs.insert(name, sha256_file(f)?);
    }
    let path = out_dir.join("manifest.json");
    io::write_json(
        &path,
        &json!({
            "command": command,
            "seed": cfg.seed,
            "config_hash": cfg.hash(),
            "config": cfg,
            "outputs": outputs,
        }),
    )?;
    Ok(path)
}

fn synth_config(cfg: &RunConfig) -> SynthConfig {
    SynthConfig {
        n: cfg.n,
        stage_effect: cfg.stage_effect,
        sex_effect: cfg.sex_effect,
        treatment_log_hr: cfg.treatment_log_hr,
        censoring_rate: cfg.censoring_rate,
        seed: cfg.seed,
        ..SynthConfig::default()
    }
}

/// `gen`: synthetic cohort plus the true propensities in score format.
pub fn gen(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome> {
    let s = generate_synthetic_cohort(&synth_config(cfg)).context("data: generating synthetic cohort")?;
    let cohort_path = out_dir.join("cohort.csv");
    save_cohort(&s.cohort, &cohort_path).with_context(|| format!("writing {}", cohort_path.display()))?;
    let z = s.cohort.treatment()?;
    let truth: Vec<ScoreRecord> = s
        .true_propensity
        .iter()
        .enumerate()
        .map(|(row, &ps)| ScoreRecord { row, treatment: z[row], ps, in_sample: 1 })
        .collect();
    let truth_path = out_dir.join("true_scores.csv");
    io::write_csv(&truth_path, &truth, &io::SCORE_HEADER)?;
    Ok(Outcome { status: Status::Ok, files: vec![cohort_path, truth_path] })
}

#[derive(Serialize)]
struct FitMeta {
    model: String,
    sample: String,
    n_train: usize,
    n_total: usize,
    features: Vec<String>,
    seed: u64,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    training_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluations: Option<usize>,
}

/// Propensities for every cohort row from a model trained on `train`.
/// The second value is the QNN training loss and evaluation count.
fn fit_model(
    cfg: &RunConfig,
    cohort: &Cohort,
    names: &[&str],
    train: &[usize],
    z: &[f64],
) -> Result<(Vec<f64>, Option<(f64, usize)>)> {
    let raw = feature_matrix(cohort, names)?;
    let x_train: Vec<Vec<f64>> = train.iter().map(|&i| raw[i].clone()).collect();
    let y_train: Vec<f64> = train.iter().map(|&i| z[i]).collect();
    let clip = |p: f64| clip_propensity(p, cfg.clip_epsilon);
    match cfg.model {
        Model::Lr => {
            let m = fit_logistic(&x_train, &y_train, 100, 1e-8).context("classical: fitting logistic regression")?;
            if m.separated {
                eprintln!("warning: logistic regression: training data are separable; coefficients were bounded");
            }
            let ps = raw.iter().map(|r| predict_logistic(&m, r).map(clip)).collect::<qpsa::Result<_>>()?;
            Ok((ps, None))
        }
        Model::Gbm => {
            let gcfg = GbmConfig {
                n_trees: cfg.gbm_trees,
                depth: cfg.gbm_depth,
                learning_rate: cfg.gbm_learning_rate,
                seed: cfg.seed,
                ..GbmConfig::default()
            };
            let m = fit_gbm(&x_train, &y_train, &gcfg).context("classical: fitting gradient boosting")?;
            let ps = raw.iter().map(|r| predict_gbm(&m, r).map(clip)).collect::<qpsa::Result<_>>()?;
            Ok((ps, None))
        }
        Model::QnnExact | Model::QnnSam | Model::QnnFBackend => {
            let method = if cfg.encoding == "pi" { EncodingMethod::MinMaxPi } else { EncodingMethod::MinMaxHalfPi };
            let enc = FeatureEncoder::fit(&cohort.subset(train)?, names, method).context("data: fitting feature encoder")?;
            let angles = enc.transform(cohort)?;
            let eval_mode = match cfg.model {
                Model::QnnExact => EvalMode::Exact,
                Model::QnnSam => EvalMode::Shots(cfg.shots),
                _ => EvalMode::Noisy(NoiseModel::new(cfg.noise_p, cfg.readout_p)?, cfg.shots),
            };
            let qcfg = QnnConfig {
                layers: cfg.layers,
                variational: cfg.variational,
                eval_mode,
                alpha: cfg.alpha,
                clip_epsilon: cfg.clip_epsilon,
                seed: cfg.seed,
                optimizer: CmaesConfig {
                    sigma0: cfg.sigma0,
                    max_evaluations: cfg.max_evaluations,
                    ..CmaesConfig::default()
                },
                ..QnnConfig::new(names.len())
            };
            let a_train: Vec<Vec<f64>> = train.iter().map(|&i| angles[i].clone()).collect();
            let fitted = qnn::fit(&a_train, &y_train, None, &qcfg).context("qnn: training")?;
            Ok((fitted.predict_proba(&angles)?, Some((fitted.best_loss, fitted.evaluations))))
        }
    }
}

/// `fit-ps`: trains the chosen model on the chosen subsample and scores
/// every row. Metrics are computed on the training subsample.
pub fn fit_ps(cfg: &RunConfig, cohort_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let files = ["scores.csv", "metrics.json", "roc.csv"].map(|f| out_dir.join(f));
    ensure_distinct(&[cohort_path], &files)?;
    let cohort = load(cohort_path)?;
    let z = cohort.treatment()?;
    let names = features(cfg, &cohort);
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let train = match cfg.sample.size() {
        Some(k) => stratified_subsample(&z, k, cfg.seed).context("data: drawing subsample")?,
        None => (0..z.len()).collect(),
    };
    let (ps, qnn_info) = fit_model(cfg, &cohort, &name_refs, &train, &z)?;

    let p_train: Vec<f64> = train.iter().map(|&i| ps[i]).collect();
    let y_train: Vec<f64> = train.iter().map(|&i| z[i]).collect();
    let metrics = evaluate(&p_train, &y_train).context("metrics: scoring the training sample")?;
    let (roc, _) = roc_and_auc(&p_train, &y_train)?;

    let mut in_sample = vec![0u8; z.len()];
    for &i in &train {
        in_sample[i] = 1;
    }
    let scores: Vec<ScoreRecord> = (0..z.len())
        .map(|row| ScoreRecord { row, treatment: z[row], ps: ps[row], in_sample: in_sample[row] })
        .collect();
    io::write_csv(&files[0], &scores, &io::SCORE_HEADER)?;
    let qnn_model = matches!(cfg.model, Model::QnnExact | Model::QnnSam | Model::QnnFBackend);
    let meta = FitMeta {
        model: cfg.model.to_string(),
        sample: cfg.sample.to_string(),
        n_train: train.len(),
        n_total: z.len(),
        features: names.clone(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        shots: matches!(cfg.model, Model::QnnSam | Model::QnnFBackend).then_some(cfg.shots),
        noise_p: (cfg.model == Model::QnnFBackend).then_some(cfg.noise_p),
        training_loss: qnn_info.map(|q| q.0),
        evaluations: qnn_info.filter(|_| qnn_model).map(|q| q.1),
    };
    io::write_json(
        &files[1],
        &json!({
            "auc": metrics.auc,
            "log_loss": metrics.log_loss,
            "brier": metrics.brier,
            "accuracy": metrics.accuracy,
            "meta": meta,
        }),
    )?;
    let roc: Vec<RocRecord> = roc.points.iter().map(|p| RocRecord { threshold: p.threshold, fpr: p.fpr, tpr: p.tpr }).collect();
    io::write_csv(&files[2], &roc, &io::ROC_HEADER)?;
    Ok(Outcome { status: Status::Ok, files: files.to_vec() })
}

fn scheme(method: AdjustMethod) -> Option<WeightScheme> {
    match method {
        AdjustMethod::Ate => Some(WeightScheme::Ate),
        AdjustMethod::Att => Some(WeightScheme::Att),
        AdjustMethod::Overlap => Some(WeightScheme::Overlap),
        AdjustMethod::Mw => Some(WeightScheme::Matching),
        _ => None,
    }
}

/// Report for an empty match set: the "after" columns are undefined.
fn empty_after(before: BalanceReport) -> BalanceReport {
    BalanceReport {
        rows: before
            .rows
            .into_iter()
            .map(|r| BalanceRow { smd_after: f64::NAN, p_after: None, ..r })
            .collect(),
        mean_smd_after: f64::NAN,
        ..before
    }
}

/// `adjust`: matching or weighting on stored scores, plus the balance
/// report.
pub fn adjust(cfg: &RunConfig, cohort_path: &Path, scores_path: &Path, out_dir: &Path) -> Result<Outcome> {
    let adj_file = out_dir.join(if cfg.adjust.is_matching() { "matches.csv" } else { "weights.csv" });
    let files = [adj_file, out_dir.join("balance.csv"), out_dir.join("balance.json")];
    ensure_distinct(&[cohort_path, scores_path], &files)?;
    let cohort = load(cohort_path)?;
    let z = cohort.treatment()?;
    let scores = io::read_scores(scores_path, z.len())?;
    if scores.iter().zip(&z).any(|(s, &zi)| s.treatment != zi) {
        bail!("{}: treatment column disagrees with the cohort", scores_path.display());
    }
    let ps: Vec<f64> = scores.iter().map(|s| s.ps).collect();
    let names = features(cfg, &cohort);
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let caliper = cfg.caliper_sd.map_or(Caliper::None, Caliper::SdMultiple);

    let mut status = Status::Ok;
    let mut extra = serde_json::Map::new();
    let report = if let Some(scheme) = scheme(cfg.adjust) {
        let w = compute_weights(&ps, &z, scheme).context("adjust: computing weights")?;
        let records: Vec<WeightRecord> = (0..z.len())
            .map(|row| WeightRecord { row, treatment: z[row], ps: ps[row], weight: w.weights[row] })
            .collect();
        io::write_csv(&files[0], &records, &io::WEIGHT_HEADER)?;
        for arm in [1.0, 0.0] {
            let ws: Vec<f64> = (0..z.len()).filter(|&i| z[i] == arm).map(|i| w.weights[i]).collect();
            let key = if arm == 1.0 { "effective_n_treated" } else { "effective_n_control" };
            extra.insert(key.into(), json!(qpsa::stats::effective_n(&ws)));
        }
        balance_report(&cohort, &name_refs, Adjustment::Weights(&w))?
    } else {
        let matches: MatchSet = match cfg.adjust {
            AdjustMethod::Nn => nearest_neighbor_match(&ps, &z, caliper)?,
            AdjustMethod::Optimal => optimal_match(&ps, &z, caliper)?,
            _ => {
                let population = if cfg.adjust == AdjustMethod::Genetic100 { 100 } else { 400 };
                let gcfg = GeneticConfig {
                    generations: cfg.genetic_generations,
                    caliper,
                    ..GeneticConfig::new(population, cfg.seed)
                };
                let x = feature_matrix(&cohort, &name_refs)?;
                let out = genetic_match(&x, &z, &ps, &gcfg).context("adjust: genetic matching")?;
                extra.insert("genetic_weights".into(), json!(out.weights));
                extra.insert("genetic_fitness".into(), json!(out.fitness));
                out.matches
            }
        };
        let records: Vec<MatchRecord> = matches
            .pairs
            .iter()
            .map(|&(t, c)| MatchRecord {
                treated: t,
                control: c,
                ps_treated: ps[t],
                ps_control: ps[c],
                distance: (ps[t] - ps[c]).abs(),
            })
            .collect();
        io::write_csv(&files[0], &records, &io::MATCH_HEADER)?;
        extra.insert("pairs".into(), json!(matches.pairs.len()));
        extra.insert("unmatched_treated".into(), json!(matches.unmatched_treated.len()));
        extra.insert("caliper".into(), json!(matches.caliper));
        if matches.pairs.is_empty() {
            eprintln!("warning: adjust: {} kept no pairs; balance after matching is undefined", cfg.adjust);
            status = Status::EmptyMatch;
            empty_after(balance_report(&cohort, &name_refs, Adjustment::None)?)
        } else {
            balance_report(&cohort, &name_refs, Adjustment::Matches(&matches))?
        }
    };
    let file = std::fs::File::create(&files[1]).with_context(|| format!("creating {}", files[1].display()))?;
    report.write_csv(file)?;
    let mut body = serde_json::Map::new();
    body.insert("method".into(), json!(cfg.adjust.to_string()));
    body.insert("mean_smd_before".into(), json!(report.mean_smd_before));
    body.insert("mean_smd_after".into(), json!(report.mean_smd_after));
    body.insert("rows".into(), json!(report.rows));
    body.extend(extra);
    io::write_json(&files[2], &body)?;
    Ok(Outcome { status, files: files.to_vec() })
}

fn ties(cfg: &RunConfig) -> Ties {
    if cfg.ties == "breslow" {
        Ties::Breslow
    } else {
        Ties::Efron
    }
}

struct Analysis {
    name: &'static str,
    samples: Vec<SurvivalSample>,
}

/// `survival`: KM curves per arm, log-rank, Cox and Aalen models for the
/// unadjusted cohort and, when given, the adjusted one.
pub fn survival(cfg: &RunConfig, cohort_path: &Path, adjustment: Option<&Path>, out_dir: &Path) -> Result<Outcome> {
    let files = ["curves.csv", "tests.json", "cox.json", "aalen.json"].map(|f| out_dir.join(f));
    let mut inputs = vec![cohort_path];
    inputs.extend(adjustment);
    ensure_distinct(&inputs, &files)?;
    let cohort = load(cohort_path)?;
    let mut analyses = vec![Analysis { name: "unadjusted", samples: samples_from_cohort(&cohort, None, &[TREATMENT])? }];
    if let Some(path) = adjustment {
        let samples = match io::read_adjustment(path)? {
            AdjustmentFile::Weights(w) => {
                if w.len() != cohort.len() || w.iter().enumerate().any(|(i, r)| r.row != i) {
                    bail!("{}: expected one weight per cohort row", path.display());
                }
                let w: Vec<f64> = w.iter().map(|r| r.weight).collect();
                samples_from_cohort(&cohort, Some(&w), &[TREATMENT])?
            }
            AdjustmentFile::Matches(m) => {
                if m.is_empty() {
                    bail!("{}: no matched pairs to analyse", path.display());
                }
                let idx: Vec<usize> = m.iter().map(|p| p.treated).chain(m.iter().map(|p| p.control)).collect();
                samples_from_cohort(&cohort.subset(&idx)?, None, &[TREATMENT])?
            }
        };
        analyses.push(Analysis { name: "adjusted", samples });
    }

    let cox_cfg = CoxConfig { ties: ties(cfg), ..CoxConfig::default() };
    let term_names = vec![TREATMENT.to_string()];
    let mut curves = Vec::new();
    let (mut tests, mut cox, mut aalen) = (serde_json::Map::new(), serde_json::Map::new(), serde_json::Map::new());
    for a in &analyses {
        for g in [0u8, 1] {
            let arm: Vec<SurvivalSample> = a.samples.iter().filter(|s| s.group == g).cloned().collect();
            if arm.is_empty() {
                continue;
            }
            let km = kaplan_meier(&arm)?;
            for k in 0..km.times.len() {
                curves.push(CurveRecord {
                    analysis: a.name.into(),
                    group: g,
                    time: km.times[k],
                    survival: km.survival[k],
                    at_risk: km.at_risk[k],
                    events: km.events[k],
                });
            }
        }
        let lr = log_rank(&a.samples).with_context(|| format!("survival: log-rank test ({})", a.name))?;
        tests.insert(a.name.into(), json!({ "log_rank": lr }));
        let m = fit_cox(&a.samples, &cox_cfg).with_context(|| format!("survival: Cox model ({})", a.name))?;
        cox.insert(
            a.name.into(),
            json!({
                "terms": m.terms(&term_names),
                "concordance": m.concordance,
                "score_test": m.score_test,
                "log_likelihood": m.log_likelihood,
                "iterations": m.iterations,
                "monotone_likelihood": m.monotone_likelihood,
                "ties": cfg.ties,
            }),
        );
        let am = fit_aalen(&a.samples, &term_names, &AalenConfig::default())
            .with_context(|| format!("survival: Aalen model ({})", a.name))?;
        aalen.insert(a.name.into(), serde_json::to_value(&am)?);
    }
    io::write_csv(&files[0], &curves, &io::CURVE_HEADER)?;
    io::write_json(&files[1], &tests)?;
    io::write_json(&files[2], &cox)?;
    io::write_json(&files[3], &aalen)?;
    Ok(Outcome { status: Status::Ok, files: files.to_vec() })
}

/// `pipeline`: gen (unless a cohort is given), fit-ps, adjust, survival,
/// and one manifest over everything written.
pub fn pipeline(cfg: &RunConfig, cohort: Option<&Path>, out_dir: &Path) -> Result<Outcome> {
    let mut files = Vec::new();
    let cohort_path = match cohort {
        Some(p) => p.to_path_buf(),
        None => {
            let g = gen(cfg, out_dir).context("pipeline stage gen")?;
            files.extend(g.files);
            out_dir.join("cohort.csv")
        }
    };
    let f = fit_ps(cfg, &cohort_path, out_dir).context("pipeline stage fit-ps")?;
    files.extend(f.files);
    let a = adjust(cfg, &cohort_path, &out_dir.join("scores.csv"), out_dir).context("pipeline stage adjust")?;
    let adj_path = a.files[0].clone();
    files.extend(a.files);
    let status = a.status;
    if status == Status::Ok {
        let s = survival(cfg, &cohort_path, Some(&adj_path), out_dir).context("pipeline stage survival")?;
        files.extend(s.files);
    }
    let manifest = write_manifest(cfg, "pipeline", out_dir, &files)?;
    files.push(manifest);
    Ok(Outcome { status, files })
}
