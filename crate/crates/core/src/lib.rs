//! Core algorithms for predicting whether a social-media profile's follower
//! count will rise within a month.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. File formats,
//! reports and the command-line pipeline live in the `followcast` crate.
//!
//! Pipeline, bottom up:
//!
//! * [`ingest`]: profile snapshots, filtering, two-snapshot labelling,
//!   stratified splits and descriptive summaries.
//! * [`lexicon`]: name-field normalisation, given-name and English-word
//!   matching, and the three name-field [`Group`]s.
//! * [`features`]: per-group feature schemas and extraction.
//! * [`stats`]: descriptive statistics, one-way ANOVA, Tukey-Kramer and the
//!   special functions behind every p-value.
//! * [`logreg`]: logistic regression by IRLS with Wald inference and
//!   Nagelkerke R².
//! * [`models`]: trees, gradient boosting, random forest, kNN, naive Bayes,
//!   AUC, repeated stratified cross-validation and grid search.
//! * [`router`]: the group-routed classifier and its baselines.
//! * [`synth`]: planted-truth synthetic profiles.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod exec;
pub mod features;
pub mod ingest;
pub mod lexicon;
pub mod linalg;
pub mod logreg;
pub mod models;
pub mod rng;
pub mod router;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use features::{FeatureSchema, FeatureVector, Scaler};
pub use ingest::{CrawlContext, LabeledProfile, RawProfile};
pub use lexicon::{Group, NameLexicon, WordList};
pub use models::Matrix;
