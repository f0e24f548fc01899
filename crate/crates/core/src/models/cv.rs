//! Repeated stratified k-fold cross-validation scored by AUC.
//!
//! Fold assignment depends only on the labels, `k`, the seed and the repeat
//! index, so every learner evaluated with the same config sees the same
//! folds. Unit `(repeat, fold)` fits with seed `derive(seed, [repeat, fold])`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::Matrix;
use crate::models::{auc, Classifier, Learner};
use crate::rng;
use crate::stats::{mean, sample_sd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl CvConfig {
    pub fn units(&self) -> usize {
        self.k * self.repeats
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.repeats < 1 {
            return Err(Error::InvalidArgument(alloc::format!(
                "cross-validation needs k >= 2 and repeats >= 1 (got k={}, repeats={})",
                self.k,
                self.repeats
            )));
        }
        Ok(())
    }

    /// Checks that stratified folds will contain both classes.
    pub fn check_labels(&self, y: &[bool]) -> Result<()> {
        self.validate()?;
        let positives = y.iter().filter(|&&b| b).count();
        let negatives = y.len() - positives;
        if positives.min(negatives) < self.k {
            return Err(Error::TooFewPerClass {
                needed: self.k,
                positives,
                negatives,
            });
        }
        Ok(())
    }

    pub(crate) fn unit_seed(&self, repeat: usize, fold: usize) -> u64 {
        rng::derive(self.seed, &[repeat as u64, fold as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Repeat-major: `fold_aucs[r * k + f]`.
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
    pub sd_auc: f64,
    pub parameters: Vec<(String, String)>,
}

impl CvResult {
    pub fn from_folds(fold_aucs: Vec<f64>, parameters: Vec<(String, String)>) -> Self {
        Self {
            mean_auc: mean(&fold_aucs),
            sd_auc: sample_sd(&fold_aucs),
            fold_aucs,
            parameters,
        }
    }
}

/// Fold index of every row for one repeat. Each class is shuffled on its own
/// stream and dealt round-robin, continuing the deal across classes so fold
/// sizes differ by at most one.
pub fn stratified_folds(y: &[bool], k: usize, seed: u64, repeat: usize) -> Vec<usize> {
    let mut folds = alloc::vec![0; y.len()];
    let mut dealt = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        let mut r = rng::stream(rng::derive(seed, &[repeat as u64]), u64::from(class));
        idx.shuffle(&mut r);
        for i in idx {
            folds[i] = dealt % k;
            dealt += 1;
        }
    }
    folds
}

/// Splits row indices into (train, test) for one fold.
pub(crate) fn split(folds: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..folds.len()).partition(|&i| folds[i] != fold)
}

/// AUC on fold `fold` after fitting on the remaining rows.
pub(crate) fn fold_auc<L: Learner>(
    learner: &L,
    x: &Matrix,
    y: &[bool],
    folds: &[usize],
    fold: usize,
    seed: u64,
) -> Result<f64> {
    let (train, test) = split(folds, fold);
    let ytr: Vec<bool> = train.iter().map(|&i| y[i]).collect();
    let yte: Vec<bool> = test.iter().map(|&i| y[i]).collect();
    let model = learner.fit(&x.select_rows(&train), &ytr, seed)?;
    let scores = model.predict_rows(&x.select_rows(&test))?;
    auc(&scores, &yte)
}

pub fn cross_validate<L: Learner, E: Executor>(
    learner: &L,
    x: &Matrix,
    y: &[bool],
    cfg: &CvConfig,
    exec: &E,
) -> Result<CvResult> {
    if x.rows() != y.len() {
        return Err(Error::SchemaMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    cfg.check_labels(y)?;
    let folds: Vec<Vec<usize>> = (0..cfg.repeats).map(|r| stratified_folds(y, cfg.k, cfg.seed, r)).collect();
    let aucs = exec.map(cfg.units(), |u| {
        let (r, f) = (u / cfg.k, u % cfg.k);
        fold_auc(learner, x, y, &folds[r], f, cfg.unit_seed(r, f))
    });
    let aucs = aucs.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(CvResult::from_folds(aucs, learner.parameters()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;

    struct Constant;
    struct Column0;

    impl Classifier for Constant {
        fn predict_proba(&self, _: &[f64]) -> Result<f64> {
            Ok(0.5)
        }
    }

    impl Classifier for Column0 {
        fn predict_proba(&self, x: &[f64]) -> Result<f64> {
            Ok(x[0])
        }
    }

    impl Learner for Constant {
        type Model = Constant;
        fn fit(&self, _: &Matrix, _: &[bool], _: u64) -> Result<Constant> {
            Ok(Constant)
        }
    }

    /// Scores by the first column, which the tests fill with the label.
    impl Learner for Column0 {
        type Model = Column0;
        fn fit(&self, _: &Matrix, _: &[bool], _: u64) -> Result<Column0> {
            Ok(Column0)
        }
    }

    fn data(n: usize) -> (Matrix, Vec<bool>) {
        let y: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let rows: Vec<[f64; 1]> = y.iter().map(|&b| [f64::from(u8::from(b))]).collect();
        (Matrix::from_rows(&rows, 1).unwrap(), y)
    }

    #[test]
    fn folds_partition_and_stratify() {
        let (_, y) = data(103);
        let folds = stratified_folds(&y, 10, 1, 0);
        let mut sizes = [0usize; 10];
        let mut pos = [0usize; 10];
        for (i, &f) in folds.iter().enumerate() {
            sizes[f] += 1;
            pos[f] += usize::from(y[i]);
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert!(pos.iter().max().unwrap() - pos.iter().min().unwrap() <= 1);
        assert_eq!(folds, stratified_folds(&y, 10, 1, 0));
        assert_ne!(folds, stratified_folds(&y, 10, 1, 1));
    }

    #[test]
    fn constant_and_oracle_learners() {
        let (x, y) = data(100);
        let cfg = CvConfig { k: 10, repeats: 5, seed: 3 };
        let c = cross_validate(&Constant, &x, &y, &cfg, &Serial).unwrap();
        assert_eq!(c.fold_aucs.len(), 50);
        assert_eq!(c.mean_auc, 0.5);
        let o = cross_validate(&Column0, &x, &y, &cfg, &Serial).unwrap();
        assert_eq!((o.mean_auc, o.sd_auc), (1.0, 0.0));
    }

    #[test]
    fn minority_smaller_than_k_is_rejected() {
        let (x, y) = data(20);
        let cfg = CvConfig { k: 10, repeats: 1, seed: 0 };
        assert!(matches!(
            cross_validate(&Constant, &x, &y, &cfg, &Serial),
            Err(Error::TooFewPerClass { .. })
        ));
    }
}
