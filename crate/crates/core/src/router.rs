//! The group-routed classifier: one model per name-field group, each trained
//! on its own group's rows and feature schema, plus the single-schema global
//! baseline it is compared against.
//!
//! Routing is by [`assign_group`]; a profile is only ever scored by its own
//! group's model. The label threshold of 0.5 is a convenience: evaluation is
//! by AUC.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::features::{encode, FeatureSchema};
use crate::ingest::{CrawlContext, LabeledProfile, RawProfile};
use crate::lexicon::{assign_group, hex_digest, Group, NameLexicon, WordList};
use crate::linalg::Matrix;
use crate::models::{auc, grid_search, Classifier, CvConfig, CvResult, GridPoint, Learner, ModelSpec, Pipeline};
use crate::rng;

pub const LABEL_THRESHOLD: f64 = 0.5;

/// Rows of one group encoded under one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupData {
    pub group: Group,
    pub schema: FeatureSchema,
    pub user_ids: Vec<u64>,
    pub x: Matrix,
    pub y: Vec<bool>,
}

impl GroupData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }
}

/// Members of `group` encoded under `schema` (normally the same group).
pub fn encode_group(
    profiles: &[LabeledProfile],
    group: Group,
    schema: Group,
    ctx: &CrawlContext,
    lexicon: &NameLexicon,
    words: &WordList,
) -> Result<GroupData> {
    let fs = FeatureSchema::for_group(schema);
    let mut rows = Vec::new();
    let mut user_ids = Vec::new();
    let mut y = Vec::new();
    for lp in profiles {
        if assign_group(&lp.profile.name_field, lexicon, words) != group {
            continue;
        }
        rows.push(encode(&lp.profile, schema, ctx, lexicon, words)?);
        user_ids.push(lp.profile.user_id);
        y.push(lp.increased);
    }
    Ok(GroupData {
        group,
        x: Matrix::from_rows(&rows, fs.len())?,
        schema: fs,
        user_ids,
        y,
    })
}

/// Every profile encoded under the core schema, in input order.
pub fn encode_all_core(profiles: &[LabeledProfile], ctx: &CrawlContext, lexicon: &NameLexicon, words: &WordList) -> Result<GroupData> {
    let fs = FeatureSchema::for_group(Group::CustomContent);
    let mut rows = Vec::with_capacity(profiles.len());
    for lp in profiles {
        rows.push(encode(&lp.profile, Group::CustomContent, ctx, lexicon, words)?);
    }
    Ok(GroupData {
        group: Group::CustomContent,
        x: Matrix::from_rows(&rows, fs.len())?,
        schema: fs,
        user_ids: profiles.iter().map(|p| p.profile.user_id).collect(),
        y: profiles.iter().map(|p| p.increased).collect(),
    })
}

/// SHA-256 over (user_id, label) pairs in the given order.
pub fn rows_fingerprint(user_ids: &[u64], labels: &[bool]) -> String {
    let mut h = Sha256::new();
    for (id, &l) in user_ids.iter().zip(labels) {
        h.update(id.to_le_bytes());
        h.update([u8::from(l)]);
    }
    hex_digest(h)
}

/// Candidate grids per group, indexed by [`Group::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterGrids {
    pub per_group: [Vec<ModelSpec>; 3],
}

impl RouterGrids {
    pub fn uniform(specs: Vec<ModelSpec>) -> Self {
        Self {
            per_group: [specs.clone(), specs.clone(), specs],
        }
    }

    pub fn for_group(&self, g: Group) -> &[ModelSpec] {
        &self.per_group[g.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterEntry {
    pub group: Group,
    pub schema: FeatureSchema,
    pub spec: ModelSpec,
    pub pipeline: Pipeline,
    /// Cross-validation of the selected point.
    pub cv: CvResult,
    /// Every grid point evaluated for this group.
    pub grid: Vec<GridPoint>,
    pub n_train: usize,
    pub train_positives: usize,
    pub train_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterMetadata {
    pub seed: u64,
    pub cv: CvConfig,
    pub crawl_date: chrono::NaiveDate,
    pub data_fingerprint: String,
    pub lexicon_fingerprint: String,
    pub wordlist_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterModel {
    /// One entry per group, in [`Group::ALL`] order.
    pub entries: Vec<RouterEntry>,
    pub metadata: RouterMetadata,
}

/// Trains one grid-searched model per group. Groups are processed in order;
/// parallelism happens inside each grid search.
#[allow(clippy::too_many_arguments)]
pub fn train_router<E: Executor>(
    train: &[LabeledProfile],
    ctx: &CrawlContext,
    lexicon: &NameLexicon,
    words: &WordList,
    grids: &RouterGrids,
    cv: &CvConfig,
    seed: u64,
    exec: &E,
) -> Result<RouterModel> {
    let mut entries = Vec::with_capacity(3);
    for g in Group::ALL {
        let data = encode_group(train, g, g, ctx, lexicon, words)?;
        let positives = data.positives();
        if data.is_empty() || positives == 0 || positives == data.len() {
            return Err(Error::GroupUnusable {
                group: g,
                reason: format!("{} training rows, {} positive; both labels are required", data.len(), positives),
            });
        }
        let cv_g = CvConfig {
            seed: rng::derive(seed, &[g.index() as u64, 0]),
            ..*cv
        };
        let search = grid_search(grids.for_group(g), &data.x, &data.y, &cv_g, exec).map_err(|e| Error::GroupUnusable {
            group: g,
            reason: format!("{e}"),
        })?;
        let best = search.best_point().clone();
        let pipeline = best.spec.fit(&data.x, &data.y, rng::derive(seed, &[g.index() as u64, 1]))?;
        entries.push(RouterEntry {
            group: g,
            schema: data.schema.clone(),
            spec: best.spec,
            cv: search.best_cv().clone(),
            grid: search.points,
            pipeline,
            n_train: data.len(),
            train_positives: positives,
            train_fingerprint: rows_fingerprint(&data.user_ids, &data.y),
        });
    }
    let ids: Vec<u64> = train.iter().map(|p| p.profile.user_id).collect();
    let labels: Vec<bool> = train.iter().map(|p| p.increased).collect();
    Ok(RouterModel {
        entries,
        metadata: RouterMetadata {
            seed,
            cv: *cv,
            crawl_date: ctx.crawl_date,
            data_fingerprint: rows_fingerprint(&ids, &labels),
            lexicon_fingerprint: lexicon.fingerprint(),
            wordlist_fingerprint: words.fingerprint(),
        },
    })
}

impl RouterModel {
    pub fn entry(&self, g: Group) -> &RouterEntry {
        &self.entries[g.index()]
    }

    /// Structural checks: one canonical entry per group, in order.
    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != 3 {
            return Err(Error::InvalidArgument(format!("router has {} entries, expected 3", self.entries.len())));
        }
        for (e, g) in self.entries.iter().zip(Group::ALL) {
            if e.group != g || !e.schema.is_canonical() || e.schema.group != g {
                return Err(Error::InvalidArgument(format!("router entry for {g} is malformed")));
            }
            if e.pipeline.scaler.len() != e.schema.len() {
                return Err(Error::SchemaMismatch {
                    expected: e.schema.len(),
                    actual: e.pipeline.scaler.len(),
                });
            }
        }
        Ok(())
    }

    /// Binds the router to the lexicon and wordlist it was trained with.
    pub fn session<'a>(&'a self, lexicon: &'a NameLexicon, words: &'a WordList) -> Result<Session<'a>> {
        self.validate()?;
        if lexicon.fingerprint() != self.metadata.lexicon_fingerprint {
            return Err(Error::FingerprintMismatch("name lexicon"));
        }
        if words.fingerprint() != self.metadata.wordlist_fingerprint {
            return Err(Error::FingerprintMismatch("wordlist"));
        }
        Ok(Session { router: self, lexicon, words })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub group: Group,
    pub probability: f64,
    pub label: bool,
}

/// A router bound to verified resources.
#[derive(Debug, Clone, Copy)]
pub struct Session<'a> {
    router: &'a RouterModel,
    lexicon: &'a NameLexicon,
    words: &'a WordList,
}

impl<'a> Session<'a> {
    pub fn router(&self) -> &'a RouterModel {
        self.router
    }

    pub fn classify(&self, profile: &RawProfile, ctx: &CrawlContext) -> Result<Classification> {
        profile.validate(ctx)?;
        let group = assign_group(&profile.name_field, self.lexicon, self.words);
        let x = encode(profile, group, ctx, self.lexicon, self.words)?;
        let probability = self.router.entry(group).pipeline.predict_proba(&x)?;
        Ok(Classification {
            group,
            probability,
            label: probability >= LABEL_THRESHOLD,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupAuc {
    pub group: Group,
    pub n: usize,
    pub positives: usize,
    /// `None` when the group is absent from the evaluation data or has a
    /// single label there.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub user_id: u64,
    pub group: Group,
    pub probability: f64,
    pub increased: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_group: Vec<GroupAuc>,
    pub overall: f64,
    pub scored: Vec<Scored>,
}

impl Evaluation {
    pub fn group(&self, g: Group) -> &GroupAuc {
        &self.per_group[g.index()]
    }

    /// Per-group and pooled AUC of already-scored rows.
    pub fn from_scored(scored: Vec<Scored>) -> Result<Self> {
        let per_group = Group::ALL
            .iter()
            .map(|&g| {
                let (s, y): (Vec<f64>, Vec<bool>) =
                    scored.iter().filter(|r| r.group == g).map(|r| (r.probability, r.increased)).unzip();
                let positives = y.iter().filter(|&&b| b).count();
                GroupAuc {
                    group: g,
                    n: y.len(),
                    positives,
                    auc: auc(&s, &y).ok(),
                }
            })
            .collect();
        let (s, y): (Vec<f64>, Vec<bool>) = scored.iter().map(|r| (r.probability, r.increased)).unzip();
        Ok(Self {
            overall: auc(&s, &y)?,
            per_group,
            scored,
        })
    }
}

/// Scores every evaluation profile through its group's model.
pub fn evaluate_router(session: &Session<'_>, eval: &[LabeledProfile], ctx: &CrawlContext) -> Result<Evaluation> {
    let scored = eval
        .iter()
        .map(|lp| {
            let c = session.classify(&lp.profile, ctx)?;
            Ok(Scored {
                user_id: lp.profile.user_id,
                group: c.group,
                probability: c.probability,
                increased: lp.increased,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Evaluation::from_scored(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBaseline {
    pub spec: ModelSpec,
    pub cv: CvResult,
    pub evaluation: Evaluation,
}

/// One model on every training row with the core schema, scored on the
/// evaluation rows and broken down by group.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_global_baseline<E: Executor>(
    train: &[LabeledProfile],
    eval: &[LabeledProfile],
    ctx: &CrawlContext,
    lexicon: &NameLexicon,
    words: &WordList,
    grid: &[ModelSpec],
    cv: &CvConfig,
    seed: u64,
    exec: &E,
) -> Result<GlobalBaseline> {
    let data = encode_all_core(train, ctx, lexicon, words)?;
    let cv_g = CvConfig {
        seed: rng::derive(seed, &[3, 0]),
        ..*cv
    };
    let search = grid_search(grid, &data.x, &data.y, &cv_g, exec)?;
    let spec = search.best_point().spec;
    let pipeline = spec.fit(&data.x, &data.y, rng::derive(seed, &[3, 1]))?;
    let test = encode_all_core(eval, ctx, lexicon, words)?;
    let scored = eval
        .iter()
        .zip(test.x.iter_rows())
        .map(|(lp, row)| {
            Ok(Scored {
                user_id: lp.profile.user_id,
                group: assign_group(&lp.profile.name_field, lexicon, words),
                probability: pipeline.predict_proba(row)?,
                increased: lp.increased,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GlobalBaseline {
        spec,
        cv: search.best_cv().clone(),
        evaluation: Evaluation::from_scored(scored)?,
    })
}

/// AUC of an uninformative scorer.
pub const RANDOM_BASELINE_AUC: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::ingest::join_snapshots;
    use crate::logreg::LogitOptions;
    use crate::models::Classifier;
    use crate::synth::{generate, tests::resources, GeneratorConfig};

    fn world() -> (Vec<LabeledProfile>, CrawlContext, NameLexicon, WordList) {
        let (lex, words) = resources();
        let mut cfg = GeneratorConfig::paper_defaults(900, 11);
        cfg.proportions = [0.34, 0.33, 0.33];
        let out = generate(&cfg, &lex, &words, &Serial).unwrap();
        let joined = join_snapshots(&out.first, &out.second).unwrap();
        (joined.labeled, CrawlContext::new(out.first_crawl), lex, words)
    }

    fn logit_grid() -> RouterGrids {
        RouterGrids::uniform(alloc::vec![ModelSpec::Logit(LogitOptions::default())])
    }

    #[test]
    fn routes_each_profile_to_its_group_model() {
        let (data, ctx, lex, words) = world();
        let cv = CvConfig { k: 3, repeats: 1, seed: 5 };
        let router = train_router(&data, &ctx, &lex, &words, &logit_grid(), &cv, 5, &Serial).unwrap();
        router.validate().unwrap();
        let total: usize = router.entries.iter().map(|e| e.n_train).sum();
        assert_eq!(total, data.len());
        let session = router.session(&lex, &words).unwrap();
        for lp in data.iter().take(50) {
            let c = session.classify(&lp.profile, &ctx).unwrap();
            let g = assign_group(&lp.profile.name_field, &lex, &words);
            assert_eq!(c.group, g);
            let x = encode(&lp.profile, g, &ctx, &lex, &words).unwrap();
            assert_eq!(c.probability, router.entry(g).pipeline.predict_proba(&x).unwrap());
            assert_eq!(c.label, c.probability >= LABEL_THRESHOLD);
        }
        let again = train_router(&data, &ctx, &lex, &words, &logit_grid(), &cv, 5, &Serial).unwrap();
        assert_eq!(router, again);
    }

    #[test]
    fn session_rejects_other_resources() {
        let (data, ctx, lex, words) = world();
        let cv = CvConfig { k: 3, repeats: 1, seed: 5 };
        let router = train_router(&data, &ctx, &lex, &words, &logit_grid(), &cv, 5, &Serial).unwrap();
        let other = WordList::new(["unrelated"]).unwrap();
        assert_eq!(router.session(&lex, &other).unwrap_err(), Error::FingerprintMismatch("wordlist"));
    }

    #[test]
    fn single_label_group_is_unusable() {
        let (mut data, ctx, lex, words) = world();
        for lp in &mut data {
            if assign_group(&lp.profile.name_field, &lex, &words) == Group::ContainsWords {
                lp.increased = false;
            }
        }
        let cv = CvConfig { k: 3, repeats: 1, seed: 5 };
        let err = train_router(&data, &ctx, &lex, &words, &logit_grid(), &cv, 5, &Serial).unwrap_err();
        assert!(matches!(err, Error::GroupUnusable { group: Group::ContainsWords, .. }));
    }

    #[test]
    fn global_baseline_scores_every_row() {
        let (data, ctx, lex, words) = world();
        let (train, eval) = data.split_at(600);
        let cv = CvConfig { k: 3, repeats: 1, seed: 2 };
        let grid = [ModelSpec::Logit(LogitOptions::default())];
        let b = evaluate_global_baseline(train, eval, &ctx, &lex, &words, &grid, &cv, 2, &Serial).unwrap();
        assert_eq!(b.evaluation.scored.len(), eval.len());
        let n: usize = b.evaluation.per_group.iter().map(|g| g.n).sum();
        assert_eq!(n, eval.len());
    }
}
