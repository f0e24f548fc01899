//! Run configuration, read from TOML.
//!
//! Every section is optional; omitted values take the defaults below. The
//! built-in model grid is the full-size one (depth-15 boosting with 400 to
//! 2000 trees); `configs/quick.toml` holds the reduced grid used for desk
//! runs and tests. Relative paths are resolved against the config file's
//! directory.
//!
//! ```toml
//! seed = 20161010
//!
//! [paths]
//! lexicon = "names.csv"
//! wordlist = "words.txt"
//!
//! [split]
//! ratio = 0.5
//!
//! [cv]
//! k = 10
//! repeats = 5
//!
//! [grid.gbm]
//! n_trees = [400, 800, 1100, 1600, 2000]
//! max_depth = [15]
//! shrinkage = [0.025]
//!
//! # Replaces [grid] for one group only.
//! [group_grids.contains_words.gbm]
//! n_trees = [1100]
//!
//! [synth]
//! n_profiles = 20000
//!
//! [report]
//! formats = ["text", "csv"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use followcast_core::logreg::LogitOptions;
use followcast_core::models::{CvConfig, GbmParams, ModelSpec, NbParams, RfParams};
use followcast_core::router::RouterGrids;
use followcast_core::synth::{GeneratorConfig, GroupCoefficients, NameShape, PAPER_PREVALENCE};
use followcast_core::Group;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_161_010;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub split: SplitSection,
    pub cv: CvSection,
    /// Candidate models for every group (and the global baseline).
    pub grid: GridConfig,
    /// Per-group replacements for `grid`.
    pub group_grids: BTreeMap<Group, GridConfig>,
    pub synth: SynthSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            paths: Paths::default(),
            split: SplitSection::default(),
            cv: CvSection::default(),
            grid: GridConfig::full(),
            group_grids: BTreeMap::new(),
            synth: SynthSection::default(),
            report: ReportSection::default(),
        }
    }
}

/// Input files. Anything left unset falls back to the conventional file
/// name in the output directory, or to the embedded fixtures for the
/// lexicon and wordlist.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub lexicon: Option<PathBuf>,
    pub wordlist: Option<PathBuf>,
    pub first_snapshot: Option<PathBuf>,
    pub second_snapshot: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub eval: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.lexicon,
            &mut self.wordlist,
            &mut self.first_snapshot,
            &mut self.second_snapshot,
            &mut self.labeled,
            &mut self.train,
            &mut self.eval,
            &mut self.model,
            &mut self.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// Share of each class that goes to training.
    pub ratio: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { ratio: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub k: usize,
    pub repeats: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        Self { k: 10, repeats: 5 }
    }
}

fn one<T>(v: T) -> Vec<T> {
    vec![v]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbmGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub shrinkage: Vec<f64>,
    pub min_leaf: Vec<usize>,
}

impl Default for GbmGrid {
    fn default() -> Self {
        Self {
            n_trees: one(100),
            max_depth: one(3),
            shrinkage: one(0.1),
            min_leaf: one(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfGrid {
    pub n_trees: Vec<usize>,
    /// Empty means `floor(sqrt(p))`.
    pub mtry: Vec<usize>,
    pub min_leaf: Vec<usize>,
    /// Empty means unlimited depth.
    pub max_depth: Vec<usize>,
    pub bootstrap: Vec<bool>,
}

impl Default for RfGrid {
    fn default() -> Self {
        Self {
            n_trees: one(500),
            mtry: Vec::new(),
            min_leaf: one(1),
            max_depth: Vec::new(),
            bootstrap: one(true),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnGrid {
    pub k: Vec<usize>,
}

impl Default for KnnGrid {
    fn default() -> Self {
        Self { k: one(135) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbGrid {
    pub kernel: Vec<bool>,
    pub adjust: Vec<f64>,
}

impl Default for NbGrid {
    fn default() -> Self {
        Self {
            kernel: one(true),
            adjust: one(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitGrid {
    pub max_iter: Vec<usize>,
    pub tol: Vec<f64>,
}

impl Default for LogitGrid {
    fn default() -> Self {
        let d = LogitOptions::default();
        Self {
            max_iter: one(d.max_iter),
            tol: one(d.tol),
        }
    }
}

/// Parameter lists per family; a family's grid is the cartesian product of
/// its lists, expanded with the last-named parameter varying fastest.
/// Families are listed in the order gbm, rf, knn, naive_bayes, logit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub gbm: Option<GbmGrid>,
    pub rf: Option<RfGrid>,
    pub knn: Option<KnnGrid>,
    pub naive_bayes: Option<NbGrid>,
    pub logit: Option<LogitGrid>,
}

fn nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("grid list {what} is empty")));
    }
    Ok(())
}

/// `None` stands for the automatic choice when the list is empty.
fn or_auto(v: &[usize]) -> Vec<Option<usize>> {
    if v.is_empty() {
        vec![None]
    } else {
        v.iter().copied().map(Some).collect()
    }
}

impl GridConfig {
    /// The full-size grid: every family, with depth-15 boosting at
    /// shrinkage 0.025 bracketing 1100 to 1600 iterations.
    pub fn full() -> Self {
        Self {
            gbm: Some(GbmGrid {
                n_trees: vec![400, 800, 1100, 1600, 2000],
                max_depth: one(15),
                shrinkage: one(0.025),
                min_leaf: one(10),
            }),
            rf: Some(RfGrid {
                mtry: vec![3, 7],
                ..RfGrid::default()
            }),
            knn: Some(KnnGrid { k: vec![100, 135] }),
            naive_bayes: Some(NbGrid::default()),
            logit: None,
        }
    }

    pub fn expand(&self) -> Result<Vec<ModelSpec>> {
        let mut out = Vec::new();
        if let Some(g) = &self.gbm {
            nonempty(&g.n_trees, "gbm.n_trees")?;
            nonempty(&g.max_depth, "gbm.max_depth")?;
            nonempty(&g.shrinkage, "gbm.shrinkage")?;
            nonempty(&g.min_leaf, "gbm.min_leaf")?;
            for &n_trees in &g.n_trees {
                for &max_depth in &g.max_depth {
                    for &shrinkage in &g.shrinkage {
                        for &min_leaf in &g.min_leaf {
                            let p = GbmParams {
                                n_trees,
                                max_depth,
                                shrinkage,
                                min_leaf,
                            };
                            p.validate().map_err(|e| Error::Config(format!("gbm: {e}")))?;
                            out.push(ModelSpec::Gbm(p));
                        }
                    }
                }
            }
        }
        if let Some(g) = &self.rf {
            nonempty(&g.n_trees, "rf.n_trees")?;
            nonempty(&g.min_leaf, "rf.min_leaf")?;
            nonempty(&g.bootstrap, "rf.bootstrap")?;
            for &n_trees in &g.n_trees {
                for mtry in or_auto(&g.mtry) {
                    for &min_leaf in &g.min_leaf {
                        for max_depth in or_auto(&g.max_depth) {
                            for &bootstrap in &g.bootstrap {
                                if n_trees == 0 || min_leaf == 0 || mtry == Some(0) {
                                    return Err(Error::Config("rf: n_trees, mtry and min_leaf must be positive".into()));
                                }
                                out.push(ModelSpec::Rf(RfParams {
                                    n_trees,
                                    mtry,
                                    min_leaf,
                                    max_depth,
                                    bootstrap,
                                }));
                            }
                        }
                    }
                }
            }
        }
        if let Some(g) = &self.knn {
            nonempty(&g.k, "knn.k")?;
            for &k in &g.k {
                if k == 0 {
                    return Err(Error::Config("knn: k must be positive".into()));
                }
                out.push(ModelSpec::Knn { k });
            }
        }
        if let Some(g) = &self.naive_bayes {
            nonempty(&g.kernel, "naive_bayes.kernel")?;
            nonempty(&g.adjust, "naive_bayes.adjust")?;
            for &kernel in &g.kernel {
                for &adjust in &g.adjust {
                    if !(adjust > 0.0) || !adjust.is_finite() {
                        return Err(Error::Config("naive_bayes: adjust must be positive".into()));
                    }
                    out.push(ModelSpec::NaiveBayes(NbParams { kernel, adjust }));
                }
            }
        }
        if let Some(g) = &self.logit {
            nonempty(&g.max_iter, "logit.max_iter")?;
            nonempty(&g.tol, "logit.tol")?;
            for &max_iter in &g.max_iter {
                for &tol in &g.tol {
                    if max_iter == 0 || !(tol > 0.0) {
                        return Err(Error::Config("logit: max_iter and tol must be positive".into()));
                    }
                    out.push(ModelSpec::Logit(LogitOptions {
                        max_iter,
                        tol,
                        ..LogitOptions::default()
                    }));
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("grid lists no model family".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_profiles: usize,
    /// Group shares in the order contains_name, contains_words,
    /// custom_content; defaults to the crawl's shares.
    pub proportions: Option<[f64; 3]>,
    /// Per-group coefficients replacing the built-in ones.
    pub coefficients: BTreeMap<Group, GroupCoefficients>,
    /// When set, group intercepts are re-fitted so every group's expected
    /// flag rate equals it, leaving configured intercepts unused.
    pub target_prevalence: Option<f64>,
    /// Pilot sample size for the intercept calibration.
    pub calibration_pilot: usize,
    pub names: Option<NameShape>,
    pub crawl_date: Option<NaiveDate>,
    pub gap_days: Option<u64>,
    pub attrition: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            n_profiles: 20_000,
            proportions: None,
            coefficients: BTreeMap::new(),
            target_prevalence: Some(PAPER_PREVALENCE),
            calibration_pilot: 4_000,
            names: None,
            crawl_date: None,
            gap_days: None,
            attrition: 0.0,
        }
    }
}

impl SynthSection {
    /// Generator settings before any intercept calibration.
    pub fn generator(&self, seed: u64) -> Result<GeneratorConfig> {
        let mut cfg = GeneratorConfig::paper_defaults(self.n_profiles, seed);
        if let Some(p) = self.proportions {
            cfg.proportions = p;
        }
        for (g, c) in &self.coefficients {
            cfg.coefficients[g.index()] = c.clone();
        }
        if let Some(n) = &self.names {
            cfg.names = n.clone();
        }
        if let Some(d) = self.crawl_date {
            cfg.crawl_date = d;
        }
        if let Some(d) = self.gap_days {
            cfg.gap_days = d;
        }
        cfg.attrition = self.attrition;
        cfg.validate().map_err(|e| Error::Config(format!("synth: {e}")))?;
        if let Some(t) = self.target_prevalence {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config("synth: target_prevalence must lie in (0, 1)".into()));
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub formats: Vec<ReportFormat>,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            formats: vec![ReportFormat::Text, ReportFormat::Csv],
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{source_name}: {e}")))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            k: self.cv.k,
            repeats: self.cv.repeats,
            seed: self.seed,
        }
    }

    pub fn grid_for(&self, g: Group) -> &GridConfig {
        self.group_grids.get(&g).unwrap_or(&self.grid)
    }

    pub fn router_grids(&self) -> Result<RouterGrids> {
        Ok(RouterGrids {
            per_group: [
                self.grid_for(Group::ContainsName).expand()?,
                self.grid_for(Group::ContainsWords).expand()?,
                self.grid_for(Group::CustomContent).expand()?,
            ],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return Err(Error::Config(format!("split.ratio {} must lie in (0, 1)", self.split.ratio)));
        }
        self.cv_config().validate().map_err(|e| Error::Config(format!("cv: {e}")))?;
        self.grid.expand()?;
        for (g, grid) in &self.group_grids {
            grid.expand().map_err(|e| Error::Config(format!("group_grids.{}: {e}", g.slug())))?;
        }
        if self.report.formats.is_empty() {
            return Err(Error::Config("report.formats is empty".into()));
        }
        Ok(())
    }
}
