//! Subcommand implementations. Every command reads its inputs, writes its
//! artifacts into the output directory and returns what it touched; the
//! caller records that in the manifest.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use followcast_core::features::{core_features, display_name};
use followcast_core::ingest::{describe_changes, join_snapshots, stratified_split, MAX_INACTIVITY_DAYS};
use followcast_core::lexicon::assign_group;
use followcast_core::logreg::{fit_logit_dropping_aliased, wald_table, LogitOptions, INTERCEPT};
use followcast_core::models::{grid_search, CvConfig, GridSearchResult};
use followcast_core::router::{
    encode_group, evaluate_global_baseline, evaluate_router, train_router, RouterModel, LABEL_THRESHOLD,
    RANDOM_BASELINE_AUC,
};
use followcast_core::stats::{describe, one_way_anova, stars, tukey_kramer};
use followcast_core::synth::{bayes_auc, calibrate_intercepts, generate};
use followcast_core::{rng, CrawlContext, Group, LabeledProfile, NameLexicon, RawProfile, WordList};

use crate::cli::{Cli, Command};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::Parallel;
use crate::features_csv::write_features;
use crate::manifest::{FileDigest, Manifest};
use crate::model_file::{load_router, save_router};
use crate::report::{descriptive_cells, full, histogram, log_edges, write_reports, Cell, Table, DESCRIPTIVE_COLUMNS};
use crate::resources::{builtin_lexicon, builtin_wordlist, load_lexicon, load_wordlist};
use crate::snapshot::{read_labeled, read_snapshot, write_records_file, Parsed};

/// Conventional file names inside the output directory.
pub mod files {
    pub const SNAPSHOT_1: &str = "snapshot_1.jsonl";
    pub const SNAPSHOT_2: &str = "snapshot_2.jsonl";
    pub const TRUTH: &str = "truth.csv";
    pub const GENERATOR: &str = "generator.json";
    pub const FILTERED: &str = "filtered.jsonl";
    pub const LABELED: &str = "labeled.jsonl";
    pub const TRAIN: &str = "train.jsonl";
    pub const EVAL: &str = "eval.jsonl";
    pub const MODEL: &str = "router.model";
    pub const SCORES: &str = "scores.csv";
    pub const PREDICTIONS: &str = "predictions.csv";
    pub const ASSIGNMENTS: &str = "group_assignments.csv";
    pub const HISTOGRAMS: &str = "histograms.csv";
}

pub const DEFAULT_OUT: &str = "followcast-out";

/// Random streams derived from the run seed.
const SPLIT_STREAM: u64 = 1;

/// Malformed lines echoed to stderr per file; the count covers all of them.
const MAX_WARNINGS: usize = 20;

fn kv(key: &str, value: impl Display) {
    eprintln!("{key}={value}");
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

struct Context {
    config: RunConfig,
    out: PathBuf,
    exec: Parallel,
}

struct Resources {
    lexicon: NameLexicon,
    words: WordList,
    files: Vec<PathBuf>,
}

/// What a command did, for the manifest.
struct Run {
    command: Command,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<Manifest> {
    let threads = cli.threads.unwrap_or(0);
    if let Command::Rerun { manifest, verify } = &cli.command {
        return rerun(manifest, *verify, threads, cli.out.as_deref());
    }
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.paths.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    execute(config, &out, threads, cli.command)
}

/// Runs one command with a resolved configuration and writes its manifest.
pub fn execute(config: RunConfig, out: &Path, threads: usize, command: Command) -> Result<Manifest> {
    config.validate()?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let ctx = Context {
        config,
        out: absolute(out),
        exec: Parallel::new(threads)?,
    };
    let run = match command {
        Command::Synth { n } => ctx.synth(n),
        Command::Ingest {
            first,
            second,
            crawl_date,
            second_crawl_date,
        } => ctx.ingest(first, second, crawl_date, second_crawl_date, true),
        Command::Label {
            first,
            second,
            crawl_date,
            second_crawl_date,
        } => ctx.ingest(first, second.or_else(|| ctx.config.paths.second_snapshot.clone()), crawl_date, second_crawl_date, false),
        Command::Split { input, ratio } => ctx.split(input, ratio),
        Command::Groups { input } => ctx.groups(input),
        Command::Describe { input } => ctx.describe(input),
        Command::Anova { input } => ctx.anova(input),
        Command::Logreg { input } => ctx.logreg(input),
        Command::Gridsearch { input, group } => ctx.gridsearch(input, group),
        Command::Train { input } => ctx.train(input),
        Command::Evaluate { model, input, train } => ctx.evaluate(model, input, train),
        Command::Predict {
            model,
            input,
            crawl_date,
        } => ctx.predict(model, input, crawl_date),
        Command::Rerun { .. } => Err(Error::Config("a manifest cannot record a rerun".into())),
    }?;
    let digests = |paths: &[PathBuf]| paths.iter().map(|p| FileDigest::of(p)).collect::<Result<Vec<_>>>();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: ctx.config.seed,
        out: ctx.out.clone(),
        inputs: digests(&run.inputs)?,
        outputs: digests(&run.outputs)?,
        command: run.command,
        config: ctx.config,
    };
    manifest.write(&manifest.out)?;
    Ok(manifest)
}

fn rerun(path: &Path, verify: bool, threads: usize, out: Option<&Path>) -> Result<Manifest> {
    let old = Manifest::read(path)?;
    let out = out.map_or_else(|| old.out.clone(), Path::to_path_buf);
    let new = execute(old.config.clone(), &out, threads, old.command.clone())?;
    if verify {
        for o in &old.outputs {
            let name = o.path.file_name();
            let now = new.outputs.iter().find(|n| n.path.file_name() == name);
            if now.map(|n| &n.sha256) != Some(&o.sha256) {
                return Err(Error::format(
                    path.display().to_string(),
                    format!("output {} differs from the manifest", o.path.display()),
                ));
            }
        }
    }
    Ok(new)
}

fn report_parse<T>(label: &str, source: &Path, parsed: &Parsed<T>) {
    kv(&format!("{label}.records"), parsed.records.len());
    kv(&format!("{label}.malformed"), parsed.malformed.len());
    for m in parsed.malformed.iter().take(MAX_WARNINGS) {
        eprintln!("warning: {}:{}: {}", source.display(), m.line, m.reason);
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
    let err = |e: csv::Error| Error::format(path.display().to_string(), e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn group_table(name: &str, title: &str, labeled: &[LabeledProfile], res: &Resources) -> Result<Table> {
    let mut cols = vec!["User Group", "N"];
    cols.extend(DESCRIPTIVE_COLUMNS);
    let mut t = Table::new(name, title, &cols);
    let mut per_group: [Vec<f64>; 3] = Default::default();
    for lp in labeled {
        let g = assign_group(&lp.profile.name_field, &res.lexicon, &res.words);
        per_group[g.index()].push(lp.profile.followers_count as f64);
    }
    for g in Group::ALL {
        let v = &per_group[g.index()];
        let mut row = vec![Cell::text(g.label()), Cell::int(v.len() as u64)];
        match describe(v) {
            Ok(d) => row.extend(descriptive_cells(&d)),
            Err(_) => row.extend(std::iter::repeat(Cell::Empty).take(DESCRIPTIVE_COLUMNS.len())),
        }
        t.push(row);
    }
    let all: Vec<f64> = labeled.iter().map(|l| l.profile.followers_count as f64).collect();
    let mut row = vec![Cell::text("Overall"), Cell::int(all.len() as u64)];
    row.extend(descriptive_cells(&describe(&all)?));
    t.push(row);
    t.note("Follower counts of the first snapshot. 95 % interval: 2.5th to 97.5th percentile.");
    Ok(t)
}

fn cv_report(name: &str, searches: &[(Group, GridSearchResult)]) -> Table {
    let folds = searches
        .iter()
        .flat_map(|(_, s)| &s.points)
        .filter_map(|p| p.outcome.as_ref().ok())
        .map(|r| r.fold_aucs.len())
        .max()
        .unwrap_or(0);
    let fold_names: Vec<String> = (1..=folds).map(|i| format!("fold_{i}")).collect();
    let mut cols = vec!["group", "family", "parameters", "status", "mean_auc", "sd_auc"];
    cols.extend(fold_names.iter().map(String::as_str));
    let mut t = Table::new(name, "Cross-validation of every grid point", &cols);
    for (g, s) in searches {
        for p in &s.points {
            let mut row = vec![Cell::text(g.slug()), Cell::text(p.spec.family().slug()), Cell::text(p.spec.describe())];
            match &p.outcome {
                Ok(r) => {
                    row.extend([Cell::text("ok"), Cell::Num(r.mean_auc), Cell::Num(r.sd_auc)]);
                    row.extend(r.fold_aucs.iter().map(|&a| Cell::Num(a)));
                    row.extend(std::iter::repeat(Cell::Empty).take(folds - r.fold_aucs.len()));
                }
                Err(e) => {
                    row.extend([Cell::text(format!("failed: {e}")), Cell::Empty, Cell::Empty]);
                    row.extend(std::iter::repeat(Cell::Empty).take(folds));
                }
            }
            t.push(row);
        }
    }
    t
}

/// Best point per family per group, with the overall winner marked.
fn best_table(name: &str, title: &str, searches: &[(Group, GridSearchResult)]) -> Table {
    let mut t = Table::new(name, title, &["Group", "Model", "Parameter", "AUC", "SD", "Selected"]);
    for (g, s) in searches {
        for &(family, i) in &s.best_per_family {
            let p = &s.points[i];
            let r = p.outcome.as_ref().expect("family winners succeeded");
            t.push(vec![
                Cell::text(g.label()),
                Cell::text(family.label()),
                Cell::text(p.spec.describe()),
                Cell::Num(r.mean_auc),
                Cell::Num(r.sd_auc),
                Cell::text(if i == s.best { "*" } else { "" }),
            ]);
        }
    }
    t.note("AUC: mean over cross-validation folds; SD across folds. * marks the selected model.");
    t
}

impl Context {
    fn resources(&self) -> Result<Resources> {
        let mut files = Vec::new();
        let lexicon = match &self.config.paths.lexicon {
            Some(p) => {
                files.push(absolute(p));
                load_lexicon(p)?
            }
            None => builtin_lexicon(),
        };
        let words = match &self.config.paths.wordlist {
            Some(p) => {
                files.push(absolute(p));
                load_wordlist(p)?
            }
            None => builtin_wordlist(),
        };
        Ok(Resources { lexicon, words, files })
    }

    /// Flag, then config, then the conventional file in the output dir.
    fn input(&self, flag: Option<PathBuf>, configured: &Option<PathBuf>, conventional: &str, what: &str) -> Result<PathBuf> {
        let p = flag
            .or_else(|| configured.clone())
            .unwrap_or_else(|| self.out.join(conventional));
        if !p.is_file() {
            return Err(Error::MissingInput {
                what: what.into(),
                path: p,
            });
        }
        Ok(absolute(&p))
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn reports(&self, stem: &str, tables: &[Table]) -> Result<Vec<PathBuf>> {
        write_reports(&self.out, stem, tables, &self.config.report.formats)
    }

    fn labeled(&self, path: &Path, label: &str) -> Result<(Vec<LabeledProfile>, CrawlContext)> {
        let parsed = read_labeled(path)?;
        report_parse(label, path, &parsed);
        let ctx = parsed.context().expect("labeled files carry a crawl date");
        if parsed.records.is_empty() {
            return Err(Error::format(path.display().to_string(), "no labeled profiles"));
        }
        Ok((parsed.records, ctx))
    }

    fn synth(&self, n: Option<usize>) -> Result<Run> {
        let requested = n;
        let res = self.resources()?;
        let mut cfg = self.config.synth.generator(self.config.seed)?;
        if let Some(n) = requested {
            cfg.n_profiles = n;
        }
        if let Some(target) = self.config.synth.target_prevalence {
            calibrate_intercepts(
                &mut cfg,
                &res.lexicon,
                &res.words,
                target,
                self.config.synth.calibration_pilot,
                &self.exec,
            )?;
        }
        let data = generate(&cfg, &res.lexicon, &res.words, &self.exec)?;
        let first = self.out_path(files::SNAPSHOT_1);
        let second = self.out_path(files::SNAPSHOT_2);
        let truth = self.out_path(files::TRUTH);
        let generator = self.out_path(files::GENERATOR);
        write_records_file(&first, data.first_crawl, &data.first)?;
        write_records_file(&second, data.second_crawl, &data.second)?;
        write_csv(
            &truth,
            &["user_id", "group", "linear_predictor", "p_true"],
            data.truth.iter().map(|t| {
                vec![t.user_id.to_string(), t.group.slug().into(), full(t.linear_predictor), full(t.p_true)]
            }),
        )?;
        let mut json = serde_json::to_string_pretty(&cfg).map_err(|e| Error::format("generator", e.to_string()))?;
        json.push('\n');
        std::fs::write(&generator, json).map_err(|e| Error::io(&generator, e))?;

        let flagged: std::collections::BTreeSet<u64> = {
            let second_by_id: std::collections::HashMap<u64, u64> =
                data.second.iter().map(|p| (p.user_id, p.followers_count)).collect();
            data.first
                .iter()
                .filter(|p| second_by_id.get(&p.user_id).is_some_and(|&s| s > p.followers_count))
                .map(|p| p.user_id)
                .collect()
        };
        let mut t = Table::new(
            "synth_summary",
            "Synthetic profiles by group",
            &["User Group", "N", "Share", "Intercept", "Mean p_true", "Flagged", "Flagged %", "Bayes AUC"],
        );
        let summary = |rows: Vec<&followcast_core::synth::TruthRow>| {
            let p: Vec<f64> = rows.iter().map(|r| r.p_true).collect();
            let k = rows.iter().filter(|r| flagged.contains(&r.user_id)).count();
            let n = rows.len().max(1) as f64;
            (rows.len(), p.iter().sum::<f64>() / n, k, 100.0 * k as f64 / n, bayes_auc(&p))
        };
        for g in Group::ALL {
            let (n, mean_p, k, pct, auc) = summary(data.truth.iter().filter(|r| r.group == g).collect());
            t.push(vec![
                Cell::text(g.label()),
                Cell::int(n as u64),
                Cell::Num(n as f64 / data.truth.len().max(1) as f64),
                Cell::Num(cfg.coefficients[g.index()].intercept),
                Cell::Num(mean_p),
                Cell::int(k as u64),
                Cell::Num(pct),
                if n > 0 { Cell::Num(auc) } else { Cell::Empty },
            ]);
        }
        let (n, mean_p, k, pct, auc) = summary(data.truth.iter().collect());
        t.push(vec![
            Cell::text("Overall"),
            Cell::int(n as u64),
            Cell::Num(1.0),
            Cell::Empty,
            Cell::Num(mean_p),
            Cell::int(k as u64),
            Cell::Num(pct),
            Cell::Num(auc),
        ]);
        t.note(format!(
            "First crawl {}, second crawl {}; {} profiles missing from the second snapshot.",
            data.first_crawl,
            data.second_crawl,
            data.first.len() - data.second.len()
        ));
        kv("synth.profiles", data.first.len());
        kv("synth.flagged", flagged.len());
        let mut outputs = vec![first, second, truth, generator];
        outputs.extend(self.reports("synth", &[t])?);
        Ok(Run {
            command: Command::Synth { n: requested },
            inputs: res.files,
            outputs,
        })
    }

    fn ingest(
        &self,
        first: Option<PathBuf>,
        second: Option<PathBuf>,
        crawl_date: Option<NaiveDate>,
        second_crawl_date: Option<NaiveDate>,
        filter: bool,
    ) -> Result<Run> {
        let paths = &self.config.paths;
        let first = self.input(first, &paths.first_snapshot, files::SNAPSHOT_1, "first snapshot")?;
        let second = match second {
            Some(p) => Some(self.input(Some(p), &None, "", "second snapshot")?),
            None if !filter => Some(self.input(None, &paths.second_snapshot, files::SNAPSHOT_2, "second snapshot")?),
            None => paths
                .second_snapshot
                .clone()
                .or_else(|| Some(self.out_path(files::SNAPSHOT_2)).filter(|p| p.is_file()))
                .map(|p| self.input(Some(p), &None, "", "second snapshot"))
                .transpose()?,
        };
        let mut inputs = vec![first.clone()];
        let mut outputs = Vec::new();
        let mut t = Table::new(if filter { "ingest" } else { "label" }, "Ingestion", &["Step", "Count"]);

        let parsed = read_snapshot(&first, crawl_date)?;
        report_parse("first", &first, &parsed);
        let date = parsed.crawl_date.ok_or_else(|| {
            Error::format(first.display().to_string(), "no crawl date: the file has no header and --crawl-date is unset")
        })?;
        let ctx = CrawlContext::new(date);
        t.push(vec![Cell::text("first snapshot records"), Cell::int(parsed.records.len() as u64)]);
        t.push(vec![Cell::text("first snapshot malformed lines"), Cell::int(parsed.malformed.len() as u64)]);
        let mut kept = parsed.records;
        if filter {
            let (mut protected, mut verified, mut inactive) = (0u64, 0u64, 0u64);
            kept.retain(|p| {
                if p.protected {
                    protected += 1;
                } else if p.verified {
                    verified += 1;
                } else if !ctx.inactivity(p).is_some_and(|d| d <= MAX_INACTIVITY_DAYS) {
                    inactive += 1;
                } else {
                    return true;
                }
                false
            });
            for (k, v) in [("removed_protected", protected), ("removed_verified", verified), ("removed_inactive", inactive)] {
                kv(k, v);
                t.push(vec![Cell::text(k.replace('_', " ")), Cell::int(v)]);
            }
            kv("kept", kept.len());
            t.push(vec![Cell::text("kept"), Cell::int(kept.len() as u64)]);
            let filtered = self.out_path(files::FILTERED);
            write_records_file(&filtered, date, &kept)?;
            outputs.push(filtered);
        }
        if let Some(second) = &second {
            inputs.push(second.clone());
            let parsed2 = read_snapshot(second, second_crawl_date)?;
            report_parse("second", second, &parsed2);
            if let Some(d2) = parsed2.crawl_date {
                if d2 < date {
                    return Err(Error::format(
                        second.display().to_string(),
                        format!("second crawl {d2} precedes the first crawl {date}"),
                    ));
                }
            }
            let joined = join_snapshots(&kept, &parsed2.records)?;
            let increased = joined.labeled.iter().filter(|l| l.increased).count();
            kv("attrition", joined.attrition);
            kv("labeled", joined.labeled.len());
            kv("increased", increased);
            t.push(vec![Cell::text("second snapshot records"), Cell::int(parsed2.records.len() as u64)]);
            t.push(vec![Cell::text("second snapshot malformed lines"), Cell::int(parsed2.malformed.len() as u64)]);
            t.push(vec![Cell::text("attrition"), Cell::int(joined.attrition as u64)]);
            t.push(vec![Cell::text("labeled"), Cell::int(joined.labeled.len() as u64)]);
            t.push(vec![Cell::text("increased"), Cell::int(increased as u64)]);
            let labeled = self.out_path(files::LABELED);
            write_records_file(&labeled, date, &joined.labeled)?;
            outputs.push(labeled);
        }
        outputs.extend(self.reports(if filter { "ingest" } else { "label" }, &[t])?);
        let command = if filter {
            Command::Ingest {
                first: Some(first),
                second,
                crawl_date,
                second_crawl_date,
            }
        } else {
            Command::Label {
                first: Some(first),
                second,
                crawl_date,
                second_crawl_date,
            }
        };
        Ok(Run { command, inputs, outputs })
    }

    fn split(&self, input: Option<PathBuf>, ratio: Option<f64>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.labeled, files::LABELED, "labeled profiles")?;
        let ratio = ratio.unwrap_or(self.config.split.ratio);
        let (labeled, ctx) = self.labeled(&input, "labeled")?;
        let (train, eval) = stratified_split(&labeled, ratio, rng::derive(self.config.seed, &[SPLIT_STREAM]))?;
        let train_path = self.out_path(files::TRAIN);
        let eval_path = self.out_path(files::EVAL);
        write_records_file(&train_path, ctx.crawl_date, &train)?;
        write_records_file(&eval_path, ctx.crawl_date, &eval)?;
        let mut t = Table::new("split", "Stratified split", &["Part", "N", "Increased", "Increased %"]);
        for (name, part) in [("train", &train), ("eval", &eval)] {
            let k = part.iter().filter(|l| l.increased).count();
            t.push(vec![
                Cell::text(name),
                Cell::int(part.len() as u64),
                Cell::int(k as u64),
                Cell::Num(100.0 * k as f64 / part.len().max(1) as f64),
            ]);
        }
        t.note(format!("Training share per class: {ratio}."));
        let mut outputs = vec![train_path, eval_path];
        outputs.extend(self.reports("split", &[t])?);
        Ok(Run {
            command: Command::Split {
                input: Some(input.clone()),
                ratio: Some(ratio),
            },
            inputs: vec![input],
            outputs,
        })
    }

    fn groups(&self, input: Option<PathBuf>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.labeled, files::LABELED, "labeled profiles")?;
        let res = self.resources()?;
        let (labeled, ctx) = self.labeled(&input, "labeled")?;
        let assignments = self.out_path(files::ASSIGNMENTS);
        write_csv(
            &assignments,
            &["user_id", "group"],
            labeled.iter().map(|l| {
                vec![
                    l.profile.user_id.to_string(),
                    assign_group(&l.profile.name_field, &res.lexicon, &res.words).slug().into(),
                ]
            }),
        )?;
        let mut outputs = vec![assignments];
        for g in Group::ALL {
            let data = encode_group(&labeled, g, g, &ctx, &res.lexicon, &res.words)?;
            let path = self.out_path(&format!("features_{}.csv", g.slug()));
            let f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_features(std::io::BufWriter::new(f), &data)?;
            kv(&format!("group.{}", g.slug()), data.len());
            outputs.push(path);
        }
        let t = group_table("group_followers", "Follower counts by user group", &labeled, &res)?;
        outputs.extend(self.reports("groups", &[t])?);
        let mut inputs = vec![input.clone()];
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Groups { input: Some(input) },
            inputs,
            outputs,
        })
    }

    fn describe(&self, input: Option<PathBuf>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.labeled, files::LABELED, "labeled profiles")?;
        let (labeled, ctx) = self.labeled(&input, "labeled")?;
        let core: Vec<[f64; 15]> = labeled.iter().map(|l| core_features(&l.profile, &ctx)).collect();
        let col = |j: usize| -> Vec<f64> { core.iter().map(|r| r[j]).collect() };
        let counts = |f: fn(&RawProfile) -> u64| -> Vec<f64> { labeled.iter().map(|l| f(&l.profile) as f64).collect() };
        let utc: Vec<f64> = labeled
            .iter()
            .filter_map(|l| l.profile.utc_offset_hours.map(f64::from))
            .collect();
        let variables: Vec<(&str, Vec<f64>)> = vec![
            ("Followers Count", counts(|p| p.followers_count)),
            ("Friends Count", counts(|p| p.friends_count)),
            ("Tweet Count", counts(|p| p.tweet_count)),
            ("Favorited Count", counts(|p| p.favorited_count)),
            ("Listed Count", counts(|p| p.listed_count)),
            ("Description URL Count", col(6)),
            ("Description Hashtag Count", col(7)),
            ("UTC Offset", utc),
            ("Age in Days", col(0)),
            ("Inactivity in Days", col(1)),
        ];
        let mut cols = vec!["Profile Feature", "N"];
        cols.extend(DESCRIPTIVE_COLUMNS);
        let mut t1 = Table::new("profile_features", "Descriptive statistics of the profile features", &cols);
        for (name, v) in &variables {
            let mut row = vec![Cell::text(*name), Cell::int(v.len() as u64)];
            match describe(v) {
                Ok(d) => row.extend(descriptive_cells(&d)),
                Err(_) => row.extend(std::iter::repeat(Cell::Empty).take(DESCRIPTIVE_COLUMNS.len())),
            }
            t1.push(row);
        }
        t1.note("95 % interval: 2.5th to 97.5th percentile. UTC Offset covers profiles that state one.");

        let changes = describe_changes(&labeled)?;
        let mut cols = vec!["Follower Count"];
        cols.extend(DESCRIPTIVE_COLUMNS);
        let mut t2 = Table::new("follower_changes", "Follower counts across the two snapshots", &cols);
        for (name, d) in [
            ("First Dataset", &changes.first),
            ("Second Dataset", &changes.second),
            ("Absolute Change", &changes.absolute_change),
            ("Relative Change", &changes.relative_change),
        ] {
            let mut row = vec![Cell::text(name)];
            row.extend(descriptive_cells(d));
            t2.push(row);
        }
        t2.note(format!(
            "Flagged users (follower count rose): {} of {} ({:.1} %). Relative change is second / first, 0 when first is 0.",
            changes.increased,
            labeled.len(),
            changes.increased_percent
        ));

        let mut hist = Table::new("histograms", "Histograms", &["variable", "bin_lower", "bin_upper", "count"]);
        let second: Vec<f64> = labeled.iter().map(|l| l.followers_second as f64).collect();
        for (name, v) in [
            ("followers_first", &variables[0].1),
            ("followers_second", &second),
            ("friends", &variables[1].1),
            ("tweets", &variables[2].1),
            ("favorited", &variables[3].1),
            ("listed", &variables[4].1),
        ] {
            let edges = log_edges(v.iter().copied().fold(0.0, f64::max));
            for (i, c) in histogram(v, &edges).into_iter().enumerate() {
                hist.push(vec![
                    Cell::text(name),
                    Cell::Num(edges[i]),
                    Cell::Num(edges[i + 1]),
                    Cell::int(c as u64),
                ]);
            }
        }
        let hist_path = self.out_path(files::HISTOGRAMS);
        std::fs::write(&hist_path, hist.render_csv()?).map_err(|e| Error::io(&hist_path, e))?;
        let mut outputs = self.reports("describe", &[t1, t2])?;
        outputs.push(hist_path);
        Ok(Run {
            command: Command::Describe { input: Some(input.clone()) },
            inputs: vec![input],
            outputs,
        })
    }

    fn anova(&self, input: Option<PathBuf>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.labeled, files::LABELED, "labeled profiles")?;
        let res = self.resources()?;
        let (labeled, _) = self.labeled(&input, "labeled")?;
        let mut per_group: [Vec<f64>; 3] = Default::default();
        for lp in &labeled {
            let g = assign_group(&lp.profile.name_field, &res.lexicon, &res.words);
            per_group[g.index()].push(lp.profile.followers_count as f64);
        }
        let present: Vec<(Group, &[f64])> = Group::ALL
            .iter()
            .map(|&g| (g, per_group[g.index()].as_slice()))
            .filter(|(_, v)| !v.is_empty())
            .collect();
        if present.len() < 2 {
            return Err(Error::format(input.display().to_string(), "ANOVA needs at least two non-empty groups"));
        }
        let values: Vec<&[f64]> = present.iter().map(|(_, v)| *v).collect();
        let a = one_way_anova(&values)?;
        let mut t = Table::new("anova", "Analysis of variance of the follower count", &["Source", "SS", "df", "MS", "F", "p"]);
        t.push(vec![
            Cell::text("Between"),
            Cell::Big(a.ss_between),
            Cell::int(a.df_between as u64),
            Cell::Big(a.ms_between),
            Cell::Num(a.f_value),
            Cell::P(a.p_value),
        ]);
        t.push(vec![
            Cell::text("Within"),
            Cell::Big(a.ss_within),
            Cell::int(a.df_within as u64),
            Cell::Big(a.ms_within),
            Cell::Empty,
            Cell::Empty,
        ]);
        t.push(vec![
            Cell::text("Total"),
            Cell::Big(a.ss_total),
            Cell::int(a.df_total() as u64),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ]);
        if present.len() < 3 {
            t.note("Groups without members are left out.");
        }
        let comparisons = tukey_kramer(&present, &a)?;
        let mut tk = Table::new(
            "tukey",
            "Tukey-Kramer pairwise comparisons",
            &["Group A", "Group B", "Mean difference", "SE", "q", "p"],
        );
        for c in &comparisons {
            tk.push(vec![
                Cell::text(c.group_a.label()),
                Cell::text(c.group_b.label()),
                Cell::Num(c.mean_difference),
                Cell::Num(c.standard_error),
                Cell::Num(c.q_statistic),
                Cell::P(c.p_value),
            ]);
        }
        tk.note("Mean difference: mean(A) - mean(B). p from the studentized range distribution.");
        let t3 = group_table("group_followers", "Follower counts by user group", &labeled, &res)?;
        let outputs = self.reports("anova", &[t3, t, tk])?;
        let mut inputs = vec![input.clone()];
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Anova { input: Some(input) },
            inputs,
            outputs,
        })
    }

    fn logreg(&self, input: Option<PathBuf>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.labeled, files::LABELED, "labeled profiles")?;
        let res = self.resources()?;
        let (labeled, ctx) = self.labeled(&input, "labeled")?;
        let mut summary = Table::new(
            "logit_summary",
            "Explained variation per user group",
            &["User Group", "N", "-2LL", "Cox & Snell R2", "Nagelkerke R2", "Iterations", "Converged"],
        );
        let mut coefs = Table::new(
            "logit_coefficients",
            "Logistic regression coefficients with Wald tests",
            &["Group", "Variable", "Beta", "SE", "Wald", "p", "Exp(Beta)"],
        );
        for g in Group::ALL {
            let data = encode_group(&labeled, g, g, &ctx, &res.lexicon, &res.words)?;
            let fit = fit_logit_dropping_aliased(&data.x, &data.y, &data.schema.feature_names, &LogitOptions::default());
            let (m, dropped) = match fit {
                Ok(v) => v,
                Err(e) => {
                    summary.push(vec![
                        Cell::text(g.label()),
                        Cell::int(data.len() as u64),
                        Cell::text(format!("unusable: {e}")),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                    ]);
                    continue;
                }
            };
            summary.push(vec![
                Cell::text(g.label()),
                Cell::int(m.n as u64),
                Cell::Num(-2.0 * m.log_likelihood),
                Cell::Num(m.cox_snell_r2()?),
                Cell::Num(m.nagelkerke_r2()?),
                Cell::int(m.iterations as u64),
                Cell::text(if m.converged { "yes" } else { "no" }),
            ]);
            match wald_table(&m, true) {
                Ok(rows) => {
                    for r in rows {
                        let name = if r.variable == INTERCEPT { display_name(INTERCEPT) } else { display_name(&r.variable) };
                        coefs.push(vec![
                            Cell::text(g.label()),
                            Cell::text(name),
                            Cell::Starred(r.beta, stars(r.p_value)),
                            Cell::Num(r.standard_error),
                            Cell::Num(r.wald_statistic),
                            Cell::P(r.p_value),
                            Cell::Num(r.odds_ratio),
                        ]);
                    }
                }
                Err(e) => coefs.note(format!("{}: no Wald table ({e}).", g.label())),
            }
            if !dropped.is_empty() {
                let names: Vec<String> = dropped.iter().map(|d| display_name(d)).collect();
                coefs.note(format!("{}: omitted as constant or collinear: {}.", g.label(), names.join(", ")));
            }
        }
        coefs.note("Significance: *** p < 0.001, ** p < 0.01, * p < 0.05.");
        let outputs = self.reports("logreg", &[summary, coefs])?;
        let mut inputs = vec![input.clone()];
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Logreg { input: Some(input) },
            inputs,
            outputs,
        })
    }

    /// Same per-group CV seeds as training, so both report the same folds.
    fn group_cv(&self, g: Group) -> CvConfig {
        CvConfig {
            seed: rng::derive(self.config.seed, &[g.index() as u64, 0]),
            ..self.config.cv_config()
        }
    }

    fn gridsearch(&self, input: Option<PathBuf>, only: Option<Group>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.train, files::TRAIN, "training profiles")?;
        let res = self.resources()?;
        let (labeled, ctx) = self.labeled(&input, "train")?;
        let grids = self.config.router_grids()?;
        let mut searches = Vec::new();
        for g in Group::ALL.into_iter().filter(|g| only.map_or(true, |o| o == *g)) {
            let data = encode_group(&labeled, g, g, &ctx, &res.lexicon, &res.words)?;
            let s = grid_search(grids.for_group(g), &data.x, &data.y, &self.group_cv(g), &self.exec)
                .map_err(|e| Error::Core(followcast_core::Error::GroupUnusable { group: g, reason: e.to_string() }))?;
            searches.push((g, s));
        }
        let cv = cv_report("cv_report", &searches);
        let best = best_table("grid_best", "Best configuration per model family", &searches);
        let mut outputs = self.reports("gridsearch", &[best])?;
        let cv_path = self.out_path("cv_report.csv");
        std::fs::write(&cv_path, cv.render_csv()?).map_err(|e| Error::io(&cv_path, e))?;
        outputs.push(cv_path);
        let mut inputs = vec![input.clone()];
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Gridsearch {
                input: Some(input),
                group: only,
            },
            inputs,
            outputs,
        })
    }

    fn train(&self, input: Option<PathBuf>) -> Result<Run> {
        let input = self.input(input, &self.config.paths.train, files::TRAIN, "training profiles")?;
        let res = self.resources()?;
        let (labeled, ctx) = self.labeled(&input, "train")?;
        let router = train_router(
            &labeled,
            &ctx,
            &res.lexicon,
            &res.words,
            &self.config.router_grids()?,
            &self.config.cv_config(),
            self.config.seed,
            &self.exec,
        )?;
        let model_path = self.out_path(files::MODEL);
        save_router(&model_path, &router)?;
        let searches: Vec<(Group, GridSearchResult)> = router
            .entries
            .iter()
            .map(|e| {
                let best = e.grid.iter().position(|p| p.spec == e.spec).expect("selected point is in the grid");
                (e.group, regroup(&e.grid, best))
            })
            .collect();
        let mut sel = Table::new(
            "selection",
            "Selected model per user group",
            &["Group", "Model", "Parameter", "CV AUC", "SD", "N train", "Positives"],
        );
        for e in &router.entries {
            sel.push(vec![
                Cell::text(e.group.label()),
                Cell::text(e.spec.family().label()),
                Cell::text(e.spec.describe()),
                Cell::Num(e.cv.mean_auc),
                Cell::Num(e.cv.sd_auc),
                Cell::int(e.n_train as u64),
                Cell::int(e.train_positives as u64),
            ]);
        }
        let best = best_table("train_grid_best", "Best configuration per model family", &searches);
        let cv = cv_report("train_cv_report", &searches);
        let mut outputs = vec![model_path];
        outputs.extend(self.reports("train", &[sel, best])?);
        let cv_path = self.out_path("train_cv_report.csv");
        std::fs::write(&cv_path, cv.render_csv()?).map_err(|e| Error::io(&cv_path, e))?;
        outputs.push(cv_path);
        let mut inputs = vec![input.clone()];
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Train { input: Some(input) },
            inputs,
            outputs,
        })
    }

    fn evaluate(&self, model: Option<PathBuf>, input: Option<PathBuf>, train: Option<PathBuf>) -> Result<Run> {
        let model = self.input(model, &self.config.paths.model, files::MODEL, "router model")?;
        let input = self.input(input, &self.config.paths.eval, files::EVAL, "evaluation profiles")?;
        let train = match train {
            Some(p) => Some(self.input(Some(p), &None, "", "training profiles")?),
            None => self
                .config
                .paths
                .train
                .clone()
                .or_else(|| Some(self.out_path(files::TRAIN)).filter(|p| p.is_file()))
                .map(|p| self.input(Some(p), &None, "", "training profiles"))
                .transpose()?,
        };
        let res = self.resources()?;
        let router: RouterModel = load_router(&model)?;
        let session = router.session(&res.lexicon, &res.words)?;
        let (eval, ctx) = self.labeled(&input, "eval")?;
        let evaluation = evaluate_router(&session, &eval, &ctx)?;
        let baseline = match &train {
            Some(path) => {
                let (train_rows, train_ctx) = self.labeled(path, "train")?;
                if train_ctx != ctx {
                    return Err(Error::format(
                        path.display().to_string(),
                        format!("crawl date {} differs from the evaluation data's {}", train_ctx.crawl_date, ctx.crawl_date),
                    ));
                }
                Some(evaluate_global_baseline(
                    &train_rows,
                    &eval,
                    &ctx,
                    &res.lexicon,
                    &res.words,
                    &self.config.grid_for(Group::CustomContent).expand()?,
                    &self.config.cv_config(),
                    self.config.seed,
                    &self.exec,
                )?)
            }
            None => None,
        };
        let mut t = Table::new(
            "evaluation",
            "Prediction results per user group",
            &["Group", "Model", "N", "Positives", "CV AUC", "Held-out AUC", "Global model AUC", "Random AUC"],
        );
        for e in &router.entries {
            let ga = evaluation.group(e.group);
            t.push(vec![
                Cell::text(e.group.label()),
                Cell::text(e.spec.family().label()),
                Cell::int(ga.n as u64),
                Cell::int(ga.positives as u64),
                Cell::Num(e.cv.mean_auc),
                Cell::opt(ga.auc),
                baseline.as_ref().map_or(Cell::Empty, |b| Cell::opt(b.evaluation.group(e.group).auc)),
                Cell::Num(RANDOM_BASELINE_AUC),
            ]);
        }
        t.push(vec![
            Cell::text("Overall"),
            Cell::Empty,
            Cell::int(eval.len() as u64),
            Cell::int(eval.iter().filter(|l| l.increased).count() as u64),
            Cell::Empty,
            Cell::Num(evaluation.overall),
            baseline.as_ref().map_or(Cell::Empty, |b| Cell::Num(b.evaluation.overall)),
            Cell::Num(RANDOM_BASELINE_AUC),
        ]);
        t.note("CV AUC: mean over the training folds of the selected model. Held-out AUC: evaluation split.");
        match &baseline {
            Some(b) => t.note(format!(
                "Global model: one {} ({}) on all training rows with the Custom Content features.",
                b.spec.family().label(),
                b.spec.describe()
            )),
            None => t.note("Global model: not computed (no training data given)."),
        }
        t.note("absent: the group has no evaluation rows or a single label.");
        let scores = self.out_path(files::SCORES);
        write_csv(
            &scores,
            &["user_id", "group", "probability", "label", "increased"],
            evaluation.scored.iter().map(|s| {
                vec![
                    s.user_id.to_string(),
                    s.group.slug().into(),
                    full(s.probability),
                    u8::from(s.probability >= LABEL_THRESHOLD).to_string(),
                    u8::from(s.increased).to_string(),
                ]
            }),
        )?;
        kv("eval.overall_auc", full(evaluation.overall));
        let mut outputs = vec![scores];
        outputs.extend(self.reports("evaluate", &[t])?);
        let mut inputs = vec![model.clone(), input.clone()];
        inputs.extend(train.clone());
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Evaluate {
                model: Some(model),
                input: Some(input),
                train,
            },
            inputs,
            outputs,
        })
    }

    fn predict(&self, model: Option<PathBuf>, input: Option<PathBuf>, crawl_date: Option<NaiveDate>) -> Result<Run> {
        let model = self.input(model, &self.config.paths.model, files::MODEL, "router model")?;
        let input = self.input(input, &self.config.paths.first_snapshot, files::SNAPSHOT_1, "snapshot")?;
        let res = self.resources()?;
        let router = load_router(&model)?;
        let session = router.session(&res.lexicon, &res.words)?;
        let parsed = read_snapshot(&input, crawl_date)?;
        report_parse("input", &input, &parsed);
        let ctx = parsed.context().ok_or_else(|| {
            Error::format(input.display().to_string(), "no crawl date: the file has no header and --crawl-date is unset")
        })?;
        let mut rows = Vec::with_capacity(parsed.records.len());
        for p in &parsed.records {
            let c = session.classify(p, &ctx)?;
            rows.push(vec![
                p.user_id.to_string(),
                c.group.slug().into(),
                full(c.probability),
                u8::from(c.label).to_string(),
            ]);
        }
        let path = self.out_path(files::PREDICTIONS);
        write_csv(&path, &["user_id", "group", "probability", "label"], rows)?;
        let mut inputs = vec![model.clone(), input.clone()];
        inputs.extend(res.files);
        Ok(Run {
            command: Command::Predict {
                model: Some(model),
                input: Some(input),
                crawl_date,
            },
            inputs,
            outputs: vec![path],
        })
    }
}

/// Rebuilds family winners from a stored grid.
fn regroup(points: &[followcast_core::models::GridPoint], best: usize) -> GridSearchResult {
    let mut best_per_family: Vec<(followcast_core::models::Family, usize)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let Ok(r) = &p.outcome else { continue };
        let f = p.spec.family();
        match best_per_family.iter_mut().find(|(bf, _)| *bf == f) {
            Some((_, j)) => {
                let cur = points[*j].outcome.as_ref().expect("winner succeeded");
                if r.mean_auc > cur.mean_auc
                    || (r.mean_auc == cur.mean_auc && p.spec.complexity() < points[*j].spec.complexity())
                {
                    *j = i;
                }
            }
            None => best_per_family.push((f, i)),
        }
    }
    best_per_family.sort_by_key(|(f, _)| *f);
    GridSearchResult {
        points: points.to_vec(),
        best_per_family,
        best,
    }
}
