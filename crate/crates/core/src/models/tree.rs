//! Regression trees grown by greedy variance reduction, shared by the
//! boosting and forest learners.
//!
//! Columns are presorted once per fit; each node holds a contiguous segment of
//! every feature's order and splits it stably, so a node costs O(n_node · p).
//! Split candidates are midpoints between consecutive distinct values and a
//! row goes left when `x <= threshold`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    /// Longest root-to-leaf path, counted in splits.
    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub(crate) fn set_leaf_value(&mut self, node: usize, v: f64) {
        self.nodes[node] = TreeNode::Leaf { value: v };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features sampled per split; `None` uses all.
    pub mtry: Option<usize>,
}

impl TreeParams {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.min_leaf == 0 {
            return Err(Error::InvalidArgument("min_leaf must be at least 1".into()));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > p.max(1) {
                return Err(Error::InvalidArgument(alloc::format!("mtry {m} outside 1..={p}")));
            }
        }
        Ok(())
    }
}

/// Row indices of every column sorted by value (ties by row index).
#[derive(Debug, Clone)]
pub struct Presorted {
    orders: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let orders = (0..x.cols())
            .map(|j| {
                let mut o: Vec<u32> = (0..x.rows() as u32).collect();
                o.sort_by(|&a, &b| x[(a as usize, j)].total_cmp(&x[(b as usize, j)]).then(a.cmp(&b)));
                o
            })
            .collect();
        Self { orders }
    }
}

/// A grown tree plus the leaf node of every sample position.
pub(crate) struct Grown {
    pub tree: Tree,
    pub leaf_of: Vec<usize>,
}

/// Grows a tree on the sample `rows` (positions may repeat a row) with one
/// target per position.
pub(crate) fn grow(
    x: &Matrix,
    sorted: &Presorted,
    rows: &[usize],
    targets: &[f64],
    params: &TreeParams,
    rng: &mut Rng,
) -> Grown {
    debug_assert_eq!(rows.len(), targets.len());
    let m = rows.len();
    let p = x.cols();

    // Positions grouped by row, so each column order can be expanded from the
    // global presort without re-sorting.
    let mut first_pos = vec![u32::MAX; x.rows()];
    let mut next_pos = vec![u32::MAX; m];
    for pos in (0..m).rev() {
        let r = rows[pos];
        next_pos[pos] = first_pos[r];
        first_pos[r] = pos as u32;
    }
    let mut orders: Vec<Vec<u32>> = sorted
        .orders
        .iter()
        .map(|global| {
            let mut o = Vec::with_capacity(m);
            for &r in global {
                let mut pos = first_pos[r as usize];
                while pos != u32::MAX {
                    o.push(pos);
                    pos = next_pos[pos as usize];
                }
            }
            o
        })
        .collect();
    let mut members: Vec<u32> = (0..m as u32).collect();

    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut leaf_of = vec![0usize; m];
    let mut goes_left = vec![false; m];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    let mut features: Vec<usize> = (0..p).collect();

    // (node id, lo, hi, depth)
    nodes.push(TreeNode::Leaf { value: 0.0 });
    let mut stack = vec![(0usize, 0usize, m, 0usize)];
    while let Some((id, lo, hi, depth)) = stack.pop() {
        let seg = &members[lo..hi];
        let n = (hi - lo) as f64;
        let sum: f64 = seg.iter().map(|&q| targets[q as usize]).sum();
        let mean = if hi > lo { sum / n } else { 0.0 };

        let mut best: Option<(f64, usize, f64, usize)> = None; // gain, feature, threshold, n_left
        if depth < params.max_depth && hi - lo >= 2 * params.min_leaf && p > 0 {
            let candidates: &[usize] = match params.mtry {
                Some(k) if k < p => {
                    for i in 0..k {
                        let j = rng.random_range(i..p);
                        features.swap(i, j);
                    }
                    features[..k].sort_unstable();
                    &features[..k]
                }
                _ => {
                    features.sort_unstable();
                    &features[..]
                }
            };
            let sumsq: f64 = seg.iter().map(|&q| targets[q as usize] * targets[q as usize]).sum();
            let parent = sum * sum / n;
            let min_gain = 1e-12 * sumsq.max(1e-300);
            for &f in candidates {
                let order = &orders[f][lo..hi];
                let mut left_sum = 0.0;
                for i in 0..order.len() - 1 {
                    let q = order[i] as usize;
                    left_sum += targets[q];
                    let nl = i + 1;
                    let nr = order.len() - nl;
                    if nl < params.min_leaf {
                        continue;
                    }
                    if nr < params.min_leaf {
                        break;
                    }
                    let a = x[(rows[q], f)];
                    let b = x[(rows[order[i + 1] as usize], f)];
                    if a == b {
                        continue;
                    }
                    let right_sum = sum - left_sum;
                    let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - parent;
                    if gain > min_gain && best.map_or(true, |(g, ..)| gain > g) {
                        let mut thr = a + 0.5 * (b - a);
                        if thr >= b {
                            thr = a;
                        }
                        best = Some((gain, f, thr, nl));
                    }
                }
            }
        }

        match best {
            None => {
                nodes[id] = TreeNode::Leaf { value: mean };
                for &q in seg {
                    leaf_of[q as usize] = id;
                }
            }
            Some((_, f, thr, nl)) => {
                for &q in &orders[f][lo..hi] {
                    goes_left[q as usize] = x[(rows[q as usize], f)] <= thr;
                }
                for order in orders.iter_mut().chain(core::iter::once(&mut members)) {
                    stable_partition(&mut order[lo..hi], &goes_left, &mut scratch);
                }
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[id] = TreeNode::Split {
                    feature: f,
                    threshold: thr,
                    left,
                    right: left + 1,
                };
                // Right first so the left subtree is numbered first.
                stack.push((left + 1, lo + nl, hi, depth + 1));
                stack.push((left, lo, lo + nl, depth + 1));
            }
        }
    }
    Grown {
        tree: Tree { nodes },
        leaf_of,
    }
}

fn stable_partition(seg: &mut [u32], goes_left: &[bool], scratch: &mut Vec<u32>) {
    scratch.clear();
    let mut w = 0;
    for i in 0..seg.len() {
        let q = seg[i];
        if goes_left[q as usize] {
            seg[w] = q;
            w += 1;
        } else {
            scratch.push(q);
        }
    }
    seg[w..].copy_from_slice(scratch);
}

/// Fits a regression tree to `targets` on every row of `x`.
pub fn fit_regression_tree(x: &Matrix, targets: &[f64], params: &TreeParams, rng: &mut Rng) -> Result<Tree> {
    if x.rows() != targets.len() {
        return Err(Error::SchemaMismatch {
            expected: x.rows(),
            actual: targets.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::Empty("tree training rows"));
    }
    params.validate(x.cols())?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    Ok(grow(x, &Presorted::new(x), &rows, targets, params, rng).tree)
}
