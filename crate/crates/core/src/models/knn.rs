//! k-nearest neighbours on (already scaled) features. Distance ties go to the
//! lower training row.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<bool>,
}

pub fn fit_knn(x: &Matrix, y: &[bool], k: usize) -> Result<KnnModel> {
    if y.len() != x.rows() {
        return Err(Error::SchemaMismatch { expected: x.rows(), actual: y.len() });
    }
    if k == 0 || k > x.rows() {
        return Err(Error::InvalidArgument(alloc::format!("k = {k} outside 1..={}", x.rows())));
    }
    Ok(KnnModel { k, x: x.clone(), y: y.to_vec() })
}

impl KnnModel {
    /// Indices of the k nearest training rows, nearest first.
    pub fn neighbours(&self, q: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_unstable_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Fraction of positive labels among the k nearest rows.
    pub fn predict_proba(&self, q: &[f64]) -> f64 {
        let pos = self.neighbours(q).into_iter().filter(|&i| self.y[i]).count();
        pos as f64 / self.k as f64
    }
}
