//! File formats, reports and the command-line pipeline around
//! `followcast-core`.
//!
//! Everything that touches the file system lives here: JSON-lines
//! snapshots, the lexicon and word-list loaders, feature CSVs, the router
//! model container, the TOML run configuration, text and CSV reports and
//! the run manifest.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod features_csv;
pub mod manifest;
pub mod model_file;
pub mod report;
pub mod resources;
pub mod snapshot;

pub use error::{Error, Result};
