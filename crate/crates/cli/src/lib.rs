//! Command-line front end: `gen`, `fit-ps`, `adjust`, `survival` and
//! `pipeline`, all writing CSV/JSON into `--out-dir`.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::commands::Status;
use crate::config::{AdjustMethod, Model, RunConfig, Sample};

#[derive(Debug, Parser)]
#[command(name = "qpsa", version, about = "Propensity-score survival analysis with quantum and classical propensity models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort (cohort.csv, true_scores.csv, manifest.json).
    Gen(Common),
    /// Fit a propensity model (scores.csv, metrics.json, roc.csv).
    FitPs {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cohort: PathBuf,
    },
    /// Match or weight on stored scores (matches.csv or weights.csv, balance.csv, balance.json).
    Adjust {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long)]
        scores: PathBuf,
    },
    /// Survival analyses (curves.csv, tests.json, cox.json, aalen.json).
    Survival {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cohort: PathBuf,
        /// matches.csv or weights.csv from `adjust`.
        #[arg(long)]
        adjustment: Option<PathBuf>,
    },
    /// gen (unless --cohort is given), fit-ps, adjust and survival in one go.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cohort: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    #[arg(long, value_enum)]
    pub sample: Option<Sample>,
    #[arg(long, value_enum)]
    pub adjust: Option<AdjustMethod>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub noise_p: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// `key=value` file; its values override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Common {
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { cfg.$f = v; })* };
        }
        take!(seed, n, model, sample, adjust, shots, noise_p, alpha);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one parsed command line and returns its status.
pub fn run(cli: &Cli) -> Result<Status> {
    let (common, name) = match &cli.command {
        Command::Gen(c) => (c, "gen"),
        Command::FitPs { common, .. } => (common, "fit-ps"),
        Command::Adjust { common, .. } => (common, "adjust"),
        Command::Survival { common, .. } => (common, "survival"),
        Command::Pipeline { common, .. } => (common, "pipeline"),
    };
    let cfg = common.run_config().context("cli: reading configuration")?;
    let out = &common.out_dir;
    std::fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let outcome = match &cli.command {
        Command::Gen(_) => {
            let mut o = commands::gen(&cfg, out)?;
            let m = commands::write_manifest(&cfg, name, out, &o.files)?;
            o.files.push(m);
            o
        }
        Command::FitPs { cohort, .. } => commands::fit_ps(&cfg, cohort, out)?,
        Command::Adjust { cohort, scores, .. } => commands::adjust(&cfg, cohort, scores, out)?,
        Command::Survival { cohort, adjustment, .. } => commands::survival(&cfg, cohort, adjustment.as_deref(), out)?,
        Command::Pipeline { cohort, .. } => commands::pipeline(&cfg, cohort.as_deref(), out)?,
    };
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.status)
}
