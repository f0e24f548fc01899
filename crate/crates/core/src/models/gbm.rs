//! Gradient boosting with binomial deviance.
//!
//! Each stage fits a regression tree to the residuals `y − p`, then replaces
//! every leaf value by one Newton step `Σr / Σp(1 − p)` over the leaf. If the
//! shrunken stage would raise training deviance, its leaf values are halved
//! until it does not (or zeroed), so the recorded deviance trace never
//! increases.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::logreg::{log_likelihood_eta, sigmoid};
use crate::models::tree::{grow, Presorted, Tree, TreeNode, TreeParams};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    pub min_leaf: usize,
}

impl GbmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrinkage > 0.0 && self.shrinkage <= 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "shrinkage {} outside (0, 1]",
                self.shrinkage
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidArgument("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    /// Log-odds of the training prevalence.
    pub initial_score: f64,
    pub trees: Vec<Tree>,
    pub shrinkage: f64,
    pub n_trees: usize,
    /// Mean training deviance before the first tree and after each tree.
    pub deviance_trace: Vec<f64>,
}

impl GbmModel {
    pub fn decision_function(&self, x: &[f64]) -> f64 {
        self.initial_score + self.shrinkage * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision_function(x))
    }
}

fn mean_deviance(f: &[f64], y: &[bool]) -> f64 {
    -2.0 * log_likelihood_eta(f, y) / f.len() as f64
}

/// Most halvings tried before a stage is dropped.
const MAX_HALVINGS: usize = 30;

pub fn fit_gbm(x: &Matrix, y: &[bool], params: &GbmParams) -> Result<GbmModel> {
    params.validate()?;
    let n = x.rows();
    if y.len() != n {
        return Err(Error::SchemaMismatch { expected: n, actual: y.len() });
    }
    let n1 = y.iter().filter(|&&b| b).count();
    if n1 == 0 || n1 == n {
        return Err(Error::SingleClass);
    }
    let prevalence = n1 as f64 / n as f64;
    let f0 = libm::log(prevalence / (1.0 - prevalence));
    let yf: Vec<f64> = y.iter().map(|&b| f64::from(u8::from(b))).collect();
    let rows: Vec<usize> = (0..n).collect();
    let sorted = Presorted::new(x);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        mtry: None,
    };
    // No feature sampling, so the stream is never drawn from.
    let mut unused = rng::stream(0, 0);

    let mut f = vec![f0; n];
    let mut dev = mean_deviance(&f, y);
    let mut trace = Vec::with_capacity(params.n_trees + 1);
    trace.push(dev);
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut resid = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut cand = vec![0.0; n];

    for _ in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(f[i]);
            resid[i] = yf[i] - p;
            hess[i] = p * (1.0 - p);
        }
        let grown = grow(x, &sorted, &rows, &resid, &tree_params, &mut unused);
        let mut tree = grown.tree;
        let n_nodes = tree.nodes.len();
        let mut num = vec![0.0; n_nodes];
        let mut den = vec![0.0; n_nodes];
        for i in 0..n {
            num[grown.leaf_of[i]] += resid[i];
            den[grown.leaf_of[i]] += hess[i];
        }
        let mut leaf_value = vec![0.0; n_nodes];
        for (node, v) in leaf_value.iter_mut().enumerate() {
            if matches!(tree.nodes[node], TreeNode::Leaf { .. }) {
                *v = if den[node] > 1e-300 { num[node] / den[node] } else { 0.0 };
            }
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..n {
                cand[i] = f[i] + params.shrinkage * scale * leaf_value[grown.leaf_of[i]];
            }
            let d = mean_deviance(&cand, y);
            if d <= dev {
                dev = d;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            scale = 0.0;
        } else {
            core::mem::swap(&mut f, &mut cand);
        }
        for (node, v) in leaf_value.iter().enumerate() {
            if matches!(tree.nodes[node], TreeNode::Leaf { .. }) {
                tree.set_leaf_value(node, scale * v);
            }
        }
        trees.push(tree);
        trace.push(dev);
    }
    Ok(GbmModel {
        initial_score: f0,
        n_trees: trees.len(),
        trees,
        shrinkage: params.shrinkage,
        deviance_trace: trace,
    })
}
