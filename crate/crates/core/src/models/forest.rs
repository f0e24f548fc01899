//! Random forest of classification-by-regression trees: leaves hold the
//! positive-class fraction of their bootstrap rows and the forest averages
//! them.

use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::Matrix;
use crate::models::tree::{grow, Presorted, Tree, TreeParams};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    /// `None` grows until `min_leaf` or purity stops it.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
    pub mtry: usize,
    pub n_trees: usize,
}

impl RfModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn default_mtry(p: usize) -> usize {
    (libm::floor(libm::sqrt(p as f64)) as usize).max(1)
}

/// Tree `t` draws from its own stream of `seed`, so trees can be grown in any
/// order.
pub fn fit_rf<E: Executor>(x: &Matrix, y: &[bool], params: &RfParams, seed: u64, exec: &E) -> Result<RfModel> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::SchemaMismatch { expected: n, actual: y.len() });
    }
    if n == 0 {
        return Err(Error::Empty("forest training rows"));
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("a forest needs at least one tree".into()));
    }
    let mtry = params.mtry.unwrap_or_else(|| default_mtry(p).min(p.max(1)));
    let tree_params = TreeParams {
        max_depth: params.max_depth.unwrap_or(usize::MAX),
        min_leaf: params.min_leaf,
        mtry: Some(mtry),
    };
    tree_params.validate(p)?;
    let yf: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
    let sorted = Presorted::new(x);
    let trees = exec.map(params.n_trees, |t| {
        let mut r = rng::stream(rng::derive(seed, &[t as u64]), 0);
        let rows: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| r.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let targets: Vec<f64> = rows.iter().map(|&i| yf[i]).collect();
        grow(x, &sorted, &rows, &targets, &tree_params, &mut r).tree
    });
    Ok(RfModel {
        n_trees: trees.len(),
        trees,
        mtry,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::models::tree::fit_regression_tree;

    fn data() -> (Matrix, Vec<bool>) {
        let rows: Vec<[f64; 3]> = (0..120)
            .map(|i| [f64::from(i % 7), f64::from((i * 5) % 9), f64::from(i % 2)])
            .collect();
        let y = rows.iter().map(|r| r[0] + r[1] > 7.0).collect();
        (Matrix::from_rows(&rows, 3).unwrap(), y)
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = data();
        let p = RfParams { n_trees: 8, ..RfParams::default() };
        let a = fit_rf(&x, &y, &p, 3, &Serial).unwrap();
        assert_eq!(a, fit_rf(&x, &y, &p, 3, &Serial).unwrap());
        assert_ne!(a, fit_rf(&x, &y, &p, 4, &Serial).unwrap());
        assert_eq!(a.mtry, 1);
    }

    #[test]
    fn single_full_tree_without_bootstrap_matches_tree() {
        let x = Matrix::from_rows(&[[0.0], [1.0]], 1).unwrap();
        let y = [false, true];
        let p = RfParams { n_trees: 1, mtry: Some(1), bootstrap: false, ..RfParams::default() };
        let rf = fit_rf(&x, &y, &p, 9, &Serial).unwrap();
        let tree = fit_regression_tree(
            &x,
            &[0.0, 1.0],
            &TreeParams { max_depth: usize::MAX, min_leaf: 1, mtry: None },
            &mut rng::stream(0, 0),
        )
        .unwrap();
        for r in x.iter_rows() {
            assert_eq!(rf.predict_proba(r), tree.predict(r));
        }
    }

    #[test]
    fn probabilities_are_fractions() {
        let (x, y) = data();
        let rf = fit_rf(&x, &y, &RfParams { n_trees: 5, ..RfParams::default() }, 1, &Serial).unwrap();
        assert!(x.iter_rows().all(|r| (0.0..=1.0).contains(&rf.predict_proba(r))));
        assert!(fit_rf(&x, &y, &RfParams { mtry: Some(4), ..RfParams::default() }, 1, &Serial).is_err());
    }
}
