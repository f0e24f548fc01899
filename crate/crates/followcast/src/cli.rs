//! Command-line surface.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use followcast_core::Group;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "followcast", version, about = "Predict follower-count rises from profile snapshots")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core. Never changes any output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// Every path left unset falls back to `[paths]` in the config, then to the
/// file an earlier stage writes into the output directory.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Command {
    /// Write two planted-truth snapshots and their truth table.
    Synth {
        /// Overrides `synth.n_profiles`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Parse and filter a snapshot; with a second snapshot, also label.
    Ingest {
        #[arg(long)]
        first: Option<PathBuf>,
        #[arg(long)]
        second: Option<PathBuf>,
        /// Crawl date of a first snapshot without header.
        #[arg(long)]
        crawl_date: Option<NaiveDate>,
        /// Crawl date of a second snapshot without header.
        #[arg(long)]
        second_crawl_date: Option<NaiveDate>,
    },
    /// Join two snapshots into labeled profiles without filtering.
    Label {
        #[arg(long)]
        first: Option<PathBuf>,
        #[arg(long)]
        second: Option<PathBuf>,
        #[arg(long)]
        crawl_date: Option<NaiveDate>,
        #[arg(long)]
        second_crawl_date: Option<NaiveDate>,
    },
    /// Stratified train/evaluation split of labeled profiles.
    Split {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Overrides `split.ratio`.
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Assign name-field groups and export per-group feature matrices.
    Groups {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Descriptive statistics and follower histograms.
    Describe {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// One-way ANOVA of follower counts across groups with Tukey-Kramer.
    Anova {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Per-group logistic regression with Wald tests.
    Logreg {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Cross-validated grid search per group.
    Gridsearch {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Restrict to one group.
        #[arg(long)]
        group: Option<Group>,
    },
    /// Train the group-routed classifier.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Held-out AUC per group and overall, with baselines.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Training data for the global baseline; skipped when unavailable.
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Score a snapshot: `user_id,group,probability,label`.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        crawl_date: Option<NaiveDate>,
    },
    /// Re-run a command from its manifest.
    Rerun {
        manifest: PathBuf,
        /// Fail unless every output hash matches the manifest.
        #[arg(long)]
        verify: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth { .. } => "synth",
            Command::Ingest { .. } => "ingest",
            Command::Label { .. } => "label",
            Command::Split { .. } => "split",
            Command::Groups { .. } => "groups",
            Command::Describe { .. } => "describe",
            Command::Anova { .. } => "anova",
            Command::Logreg { .. } => "logreg",
            Command::Gridsearch { .. } => "gridsearch",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Predict { .. } => "predict",
            Command::Rerun { .. } => "rerun",
        }
    }
}
