//! Classifier families, AUC, repeated stratified cross-validation and grid
//! search.
//!
//! Every family is fitted behind a [`Scaler`] learned on the training rows
//! only, which matters for kNN and is harmless for the others.

pub mod auc;
pub mod bayes;
pub mod cv;
pub mod forest;
pub mod gbm;
pub mod grid;
pub mod knn;
pub mod tree;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use crate::linalg::Matrix;
use crate::error::{Error, Result};
use crate::exec::Serial;
use crate::features::Scaler;
use crate::logreg::{fit_logit_dropping_aliased, LogitModel, LogitOptions};

pub use auc::auc;
pub use bayes::{fit_nb, NbModel, NbParams};
pub use cv::{cross_validate, stratified_folds, CvConfig, CvResult};
pub use forest::{fit_rf, RfModel, RfParams};
pub use gbm::{fit_gbm, GbmModel, GbmParams};
pub use grid::{grid_search, GridPoint, GridSearchResult};
pub use knn::{fit_knn, KnnModel};
pub use tree::{fit_regression_tree, Tree, TreeNode, TreeParams};

/// Anything that turns a feature row into a positive-class probability.
pub trait Classifier {
    fn predict_proba(&self, x: &[f64]) -> Result<f64>;

    fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.predict_proba(r)).collect()
    }
}

/// A fitting procedure with fixed hyperparameters.
pub trait Learner: Sync {
    type Model: Classifier + Send;

    /// `seed` feeds any randomness of the fit; it is derived per CV unit.
    fn fit(&self, x: &Matrix, y: &[bool], seed: u64) -> Result<Self::Model>;

    /// Hyperparameters as ordered name/value pairs, for reports.
    fn parameters(&self) -> Vec<(String, String)> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gbm,
    Rf,
    Knn,
    NaiveBayes,
    Logit,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Gbm => "Gradient Boosting Machine",
            Family::Rf => "Random Forest",
            Family::Knn => "k-Nearest Neighbors",
            Family::NaiveBayes => "Naive Bayes",
            Family::Logit => "Logistic Regression",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Family::Gbm => "gbm",
            Family::Rf => "rf",
            Family::Knn => "knn",
            Family::NaiveBayes => "naive_bayes",
            Family::Logit => "logit",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl core::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gbm" => Ok(Family::Gbm),
            "rf" => Ok(Family::Rf),
            "knn" => Ok(Family::Knn),
            "naive_bayes" | "nb" => Ok(Family::NaiveBayes),
            "logit" => Ok(Family::Logit),
            other => Err(Error::InvalidArgument(format!("unknown model family {other:?}"))),
        }
    }
}

/// One grid point: a family plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Gbm(GbmParams),
    Rf(RfParams),
    Knn { k: usize },
    NaiveBayes(NbParams),
    Logit(LogitOptions),
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Gbm(_) => Family::Gbm,
            ModelSpec::Rf(_) => Family::Rf,
            ModelSpec::Knn { .. } => Family::Knn,
            ModelSpec::NaiveBayes(_) => Family::NaiveBayes,
            ModelSpec::Logit(_) => Family::Logit,
        }
    }

    /// Secondary selection key: fewer boosting iterations or neighbours win
    /// ties on mean AUC.
    pub fn complexity(&self) -> usize {
        match self {
            ModelSpec::Gbm(p) => p.n_trees,
            ModelSpec::Knn { k } => *k,
            _ => 0,
        }
    }

    /// Compact `name=value;...` rendering.
    pub fn describe(&self) -> String {
        self.parameters()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(|| "auto".to_string(), |x| x.to_string())
}

/// A fitted model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Gbm(GbmModel),
    Rf(RfModel),
    Knn(KnnModel),
    NaiveBayes(NbModel),
    Logit(LogitModel),
}

impl FittedModel {
    pub fn family(&self) -> Family {
        match self {
            FittedModel::Gbm(_) => Family::Gbm,
            FittedModel::Rf(_) => Family::Rf,
            FittedModel::Knn(_) => Family::Knn,
            FittedModel::NaiveBayes(_) => Family::NaiveBayes,
            FittedModel::Logit(_) => Family::Logit,
        }
    }
}

impl Classifier for FittedModel {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            FittedModel::Gbm(m) => m.predict_proba(x),
            FittedModel::Rf(m) => m.predict_proba(x),
            FittedModel::Knn(m) => m.predict_proba(x),
            FittedModel::NaiveBayes(m) => m.predict_proba(x),
            FittedModel::Logit(m) => return m.predict(x),
        })
    }
}

/// Scaler fitted on the training rows followed by a model fitted on the
/// scaled rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub scaler: Scaler,
    pub model: FittedModel,
}

impl Classifier for Pipeline {
    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        self.model.predict_proba(&self.scaler.apply_row(x)?)
    }
}

impl Learner for ModelSpec {
    type Model = Pipeline;

    fn fit(&self, x: &Matrix, y: &[bool], seed: u64) -> Result<Pipeline> {
        let scaler = Scaler::fit(x)?;
        let xs = scaler.apply(x)?;
        let model = match self {
            ModelSpec::Gbm(p) => FittedModel::Gbm(fit_gbm(&xs, y, p)?),
            ModelSpec::Rf(p) => FittedModel::Rf(fit_rf(&xs, y, p, seed, &Serial)?),
            ModelSpec::Knn { k } => FittedModel::Knn(fit_knn(&xs, y, *k)?),
            ModelSpec::NaiveBayes(p) => FittedModel::NaiveBayes(fit_nb(&xs, y, p)?),
            ModelSpec::Logit(o) => {
                // Constant and aliased columns get coefficient 0.
                let names: Vec<String> = (0..xs.cols()).map(|j| format!("x{j}")).collect();
                let (sub, _) = fit_logit_dropping_aliased(&xs, y, &names, o)?;
                let mut coefficients = vec![0.0; xs.cols() + 1];
                coefficients[0] = sub.coefficients[0];
                for (v, b) in sub.variables.iter().zip(&sub.coefficients[1..]) {
                    let j = names.iter().position(|n| n == v).expect("kept name");
                    coefficients[j + 1] = *b;
                }
                FittedModel::Logit(LogitModel {
                    variables: names,
                    coefficients,
                    covariance: Matrix::zeros(0, 0),
                    ..sub
                })
            }
        };
        Ok(Pipeline { scaler, model })
    }

    fn parameters(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_string(), v);
        match self {
            ModelSpec::Gbm(p) => vec![
                kv("n_trees", p.n_trees.to_string()),
                kv("max_depth", p.max_depth.to_string()),
                kv("shrinkage", format!("{}", p.shrinkage)),
                kv("min_leaf", p.min_leaf.to_string()),
            ],
            ModelSpec::Rf(p) => vec![
                kv("n_trees", p.n_trees.to_string()),
                kv("mtry", opt(p.mtry)),
                kv("min_leaf", p.min_leaf.to_string()),
                kv("max_depth", opt(p.max_depth)),
                kv("bootstrap", p.bootstrap.to_string()),
            ],
            ModelSpec::Knn { k } => vec![kv("k", k.to_string())],
            ModelSpec::NaiveBayes(p) => vec![kv("kernel", p.kernel.to_string()), kv("adjust", format!("{}", p.adjust))],
            ModelSpec::Logit(o) => vec![kv("max_iter", o.max_iter.to_string()), kv("tol", format!("{:e}", o.tol))],
        }
    }
}
