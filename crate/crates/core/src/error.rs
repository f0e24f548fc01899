use alloc::string::String;
use alloc::vec::Vec;

use crate::lexicon::Group;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("duplicate user_id {user_id} in {list} snapshot")]
    DuplicateUserId { user_id: u64, list: &'static str },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("too few records per class: need {needed}, have {positives} positive / {negatives} negative")]
    TooFewPerClass {
        needed: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("profile {user_id} belongs to {actual:?}, not {requested:?}")]
    GroupMismatch {
        user_id: u64,
        requested: Group,
        actual: Group,
    },
    #[error("no token matches the name lexicon")]
    NoNameMatch,
    #[error("feature length mismatch: expected {expected}, got {actual}")]
    SchemaMismatch { expected: usize, actual: usize },
    #[error("rank-deficient design; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("model did not converge: {0}")]
    NotConverged(String),
    #[error("group {group:?}: {reason}")]
    GroupUnusable { group: Group, reason: String },
    #[error("resource fingerprint mismatch for {0}")]
    FingerprintMismatch(&'static str),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
