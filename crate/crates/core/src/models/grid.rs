//! Grid search over model configurations with paired folds.
//!
//! Every grid point is cross-validated on the same fold assignment and the
//! same per-unit seeds. A point whose fit fails is recorded with its error
//! and skipped during selection.
//!
//! Selection per family: highest mean AUC, then fewer boosting iterations or
//! neighbours, then earlier listing. Across families: highest mean AUC, then
//! earlier listing.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::Matrix;
use crate::models::cv::{fold_auc, stratified_folds, CvConfig, CvResult};
use crate::models::{Family, Learner, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub spec: ModelSpec,
    pub outcome: core::result::Result<CvResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    /// In listing order.
    pub points: Vec<GridPoint>,
    /// Index into `points` of each family's winner, in family order.
    pub best_per_family: Vec<(Family, usize)>,
    pub best: usize,
}

impl GridSearchResult {
    pub fn best_point(&self) -> &GridPoint {
        &self.points[self.best]
    }

    pub fn best_cv(&self) -> &CvResult {
        self.points[self.best].outcome.as_ref().expect("best point succeeded")
    }
}

pub fn grid_search<E: Executor>(
    specs: &[ModelSpec],
    x: &Matrix,
    y: &[bool],
    cfg: &CvConfig,
    exec: &E,
) -> Result<GridSearchResult> {
    if specs.is_empty() {
        return Err(Error::Empty("grid"));
    }
    if x.rows() != y.len() {
        return Err(Error::SchemaMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    cfg.check_labels(y)?;
    let folds: Vec<Vec<usize>> = (0..cfg.repeats).map(|r| stratified_folds(y, cfg.k, cfg.seed, r)).collect();
    let per_point = cfg.units();
    let aucs = exec.map(specs.len() * per_point, |u| {
        let (point, unit) = (u / per_point, u % per_point);
        let (r, f) = (unit / cfg.k, unit % cfg.k);
        fold_auc(&specs[point], x, y, &folds[r], f, cfg.unit_seed(r, f))
    });

    let mut points = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let chunk = &aucs[i * per_point..(i + 1) * per_point];
        let outcome = match chunk.iter().cloned().collect::<Result<Vec<f64>>>() {
            Ok(v) => Ok(CvResult::from_folds(v, spec.parameters())),
            Err(e) => Err(e.to_string()),
        };
        points.push(GridPoint { spec: *spec, outcome });
    }

    let mut best_per_family: Vec<(Family, usize)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let Ok(cv) = &p.outcome else { continue };
        let fam = p.spec.family();
        match best_per_family.iter_mut().find(|(f, _)| *f == fam) {
            None => best_per_family.push((fam, i)),
            Some((_, j)) => {
                let cur = &points[*j];
                let cur_auc = cur.outcome.as_ref().map(|c| c.mean_auc).unwrap_or(f64::NEG_INFINITY);
                if cv.mean_auc > cur_auc || (cv.mean_auc == cur_auc && p.spec.complexity() < cur.spec.complexity()) {
                    *j = i;
                }
            }
        }
    }
    best_per_family.sort_by_key(|(f, _)| *f);
    let mut best: Option<usize> = None;
    for &(_, i) in &best_per_family {
        let a = points[i].outcome.as_ref().map(|c| c.mean_auc).unwrap_or(f64::NEG_INFINITY);
        match best {
            None => best = Some(i),
            Some(b) => {
                let ba = points[b].outcome.as_ref().map(|c| c.mean_auc).unwrap_or(f64::NEG_INFINITY);
                if a > ba || (a == ba && i < b) {
                    best = Some(i);
                }
            }
        }
    }
    let best = best.ok_or_else(|| {
        let reasons: Vec<String> = points
            .iter()
            .filter_map(|p| p.outcome.as_ref().err().cloned())
            .collect();
        Error::NotConverged(alloc::format!("every grid point failed: {}", reasons.join(" | ")))
    })?;
    Ok(GridSearchResult {
        points,
        best_per_family,
        best,
    })
}
