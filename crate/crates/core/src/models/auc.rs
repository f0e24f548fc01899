//! Area under the ROC curve as the Mann-Whitney statistic: the chance a random
//! positive outscores a random negative, ties counting one half.

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::SchemaMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let n1 = labels.iter().filter(|&&b| b).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of (1-based, tie-averaged) ranks of the positives, doubled to stay
    // integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let twice_avg = (i + 1 + j) as u128;
        let pos = idx[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += twice_avg * pos;
        i = j;
    }
    let n1u = n1 as u128;
    let twice_u = twice_rank_sum - n1u * (n1u + 1);
    Ok(twice_u as f64 / (2.0 * n1 as f64 * n0 as f64))
}
