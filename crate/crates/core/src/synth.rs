//! Synthetic profiles with planted ground truth.
//!
//! Record `i` draws from its own stream, so output does not depend on how
//! records are scheduled. Features are computed by the real extraction code
//! from the generated profile, the flag is `Bernoulli(sigmoid(b0 + b·x))`
//! under the record's group coefficients, and the second snapshot's follower
//! count moves up exactly when the flag is set.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::features::{encode, FeatureSchema};
use crate::ingest::{CrawlContext, RawProfile};
use crate::lexicon::{Group, NameLexicon, WordList};
use crate::logreg::sigmoid;
use crate::rng::{self, Rng};

/// Log-normal marginal: `floor(exp(N(mu, sigma)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalSpec {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalSpec {
    /// Matches a median and a 97.5th percentile.
    pub fn from_median_p975(median: f64, p975: f64) -> Self {
        Self {
            mu: libm::log(median),
            sigma: libm::log(p975 / median) / 1.959_963_984_540_054,
        }
    }

    fn sample(&self, r: &mut Rng) -> Result<f64> {
        let d = LogNormal::new(self.mu, self.sigma).map_err(|e| Error::InvalidArgument(format!("log-normal: {e}")))?;
        Ok(libm::floor(d.sample(r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMarginals {
    pub followers: LogNormalSpec,
    pub friends: LogNormalSpec,
    pub tweets: LogNormalSpec,
    pub favorited: LogNormalSpec,
    pub listed: LogNormalSpec,
    /// Days since the last tweet, capped at 365.
    pub inactivity: LogNormalSpec,
}

impl Default for CountMarginals {
    /// Medians and upper 95 % bounds of the crawl's descriptive table.
    fn default() -> Self {
        Self {
            followers: LogNormalSpec::from_median_p975(112.0, 2030.0),
            friends: LogNormalSpec::from_median_p975(194.0, 1619.0),
            tweets: LogNormalSpec::from_median_p975(599.0, 22298.0),
            favorited: LogNormalSpec::from_median_p975(36.0, 3262.0),
            listed: LogNormalSpec::from_median_p975(2.0, 63.0),
            inactivity: LogNormalSpec::from_median_p975(15.0, 295.0),
        }
    }
}

/// Planted logit: intercept plus slopes keyed by schema column name; absent
/// columns have slope 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCoefficients {
    pub intercept: f64,
    #[serde(default)]
    pub slopes: BTreeMap<String, f64>,
}

impl GroupCoefficients {
    pub fn zero() -> Self {
        Self {
            intercept: 0.0,
            slopes: BTreeMap::new(),
        }
    }

    fn from_pairs(intercept: f64, pairs: &[(&str, f64)]) -> Self {
        Self {
            intercept,
            slopes: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Dense slopes aligned with the group's schema.
    pub fn dense(&self, group: Group) -> Result<Vec<f64>> {
        let schema = FeatureSchema::for_group(group);
        let mut out = vec![0.0; schema.len()];
        for (name, &b) in &self.slopes {
            let j = schema.index_of(name).ok_or_else(|| {
                Error::InvalidArgument(format!("coefficient {name:?} is not a {} feature", group.slug()))
            })?;
            out[j] = b;
        }
        Ok(out)
    }
}

/// How name fields are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameShape {
    /// English words per word-group name, drawn uniformly from this range.
    pub words_min: usize,
    pub words_max: usize,
    /// Gibberish tokens added to word-group names; one entry is drawn
    /// uniformly.
    pub gibberish_choices: Vec<usize>,
}

impl Default for NameShape {
    fn default() -> Self {
        Self {
            words_min: 1,
            words_max: 3,
            gibberish_choices: vec![0, 1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_profiles: usize,
    /// Group mixture in [`Group::ALL`] order.
    pub proportions: [f64; 3],
    /// Per group, in [`Group::ALL`] order.
    pub coefficients: [GroupCoefficients; 3],
    pub counts: CountMarginals,
    pub names: NameShape,
    pub seed: u64,
    pub crawl_date: NaiveDate,
    /// Days between the two snapshots.
    pub gap_days: u64,
    /// Fraction of users missing from the second snapshot.
    pub attrition: f64,
}

/// Group shares of the crawl: 4387210 / 471312 / 1495530 of 6354052.
pub const PAPER_PROPORTIONS: [f64; 3] = [
    4_387_210.0 / 6_354_052.0,
    471_312.0 / 6_354_052.0,
    1_495_530.0 / 6_354_052.0,
];

/// Share of users whose follower count rose between the crawls.
pub const PAPER_PREVALENCE: f64 = 0.439;

impl GeneratorConfig {
    /// Coefficients of the crawl's per-group regression (counts printed as
    /// 0.000 there get small positive slopes); intercepts are 0 and should be
    /// set with [`calibrate_intercepts`].
    pub fn paper_defaults(n_profiles: usize, seed: u64) -> Self {
        let core_cc: [(&str, f64); 13] = [
            ("age_in_days", 0.0002),
            ("inactivity_in_days", -0.009),
            ("tweet_count", 1e-5),
            ("favorited_count", 2e-5),
            ("friends_count", 2e-5),
            ("listed_count", 0.002),
            ("description_url_count", 0.036),
            ("description_hashtag_count", 0.013),
            ("has_default_profile", 0.102),
            ("has_default_profile_image", -0.872),
            ("has_description", 0.214),
            ("has_location", 0.099),
            ("has_url", 0.221),
        ];
        let words: [(&str, f64); 14] = [
            ("age_in_days", 0.0002),
            ("inactivity_in_days", -0.010),
            ("tweet_count", 1e-5),
            ("favorited_count", 2e-5),
            ("friends_count", 2e-5),
            ("listed_count", 0.003),
            ("description_url_count", -0.032),
            ("description_hashtag_count", -0.010),
            ("has_default_profile", 0.098),
            ("has_default_profile_image", -0.889),
            ("has_description", 0.223),
            ("has_location", 0.088),
            ("has_url", 0.445),
            ("word_fraction", -0.187),
        ];
        let names: [(&str, f64); 33] = [
            ("age_in_days", 0.001),
            ("inactivity_in_days", -0.009),
            ("tweet_count", 1e-5),
            ("favorited_count", 2e-5),
            ("friends_count", 2e-5),
            ("listed_count", 0.001),
            ("description_url_count", 0.055),
            ("description_hashtag_count", 0.029),
            ("has_default_profile", 0.120),
            ("has_default_profile_image", -0.898),
            ("has_description", 0.248),
            ("has_location", 0.055),
            ("has_url", 0.161),
            ("word_fraction", -0.068),
            ("is_male", -0.011),
            ("is_female", -0.058),
            ("impression_bad", -0.027),
            ("impression_classic", 0.010),
            ("impression_comedic", -0.011),
            ("impression_devious", 0.022),
            ("impression_feminine", -0.058),
            ("impression_formal", 0.011),
            ("impression_good", -0.026),
            ("impression_masculine", -0.033),
            ("impression_mature", -0.010),
            ("impression_modern", -0.032),
            ("impression_nerdy", 0.011),
            ("impression_rough", -0.019),
            ("impression_serious", 0.015),
            ("impression_strange", 0.012),
            ("impression_strong", 0.007),
            ("impression_unintellectual", 0.013),
            ("impression_youthful", 0.009),
        ];
        Self {
            n_profiles,
            proportions: PAPER_PROPORTIONS,
            coefficients: [
                GroupCoefficients::from_pairs(0.0, &names),
                GroupCoefficients::from_pairs(0.0, &words),
                GroupCoefficients::from_pairs(0.0, &core_cc),
            ],
            counts: CountMarginals::default(),
            names: NameShape::default(),
            seed,
            crawl_date: NaiveDate::from_ymd_opt(2016, 10, 10).expect("valid date"),
            gap_days: 31,
            attrition: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.proportions.iter().sum();
        if self.proportions.iter().any(|p| !(0.0..=1.0).contains(p)) || libm::fabs(sum - 1.0) > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "group proportions {:?} must lie in [0, 1] and sum to 1",
                self.proportions
            )));
        }
        for g in Group::ALL {
            let c = &self.coefficients[g.index()];
            if !c.intercept.is_finite() || c.slopes.values().any(|b| !b.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite coefficient for {g}")));
            }
            c.dense(g)?;
        }
        for (name, m) in [
            ("followers", self.counts.followers),
            ("friends", self.counts.friends),
            ("tweets", self.counts.tweets),
            ("favorited", self.counts.favorited),
            ("listed", self.counts.listed),
            ("inactivity", self.counts.inactivity),
        ] {
            if !m.mu.is_finite() || !(m.sigma >= 0.0) || !m.sigma.is_finite() {
                return Err(Error::InvalidArgument(format!("bad log-normal parameters for {name}")));
            }
        }
        if self.names.words_min == 0 || self.names.words_max < self.names.words_min {
            return Err(Error::InvalidArgument("word counts need 1 <= words_min <= words_max".into()));
        }
        if self.names.gibberish_choices.is_empty() {
            return Err(Error::Empty("gibberish_choices"));
        }
        if !(0.0..1.0).contains(&self.attrition) {
            return Err(Error::InvalidArgument("attrition must lie in [0, 1)".into()));
        }
        if self.gap_days == 0 {
            return Err(Error::InvalidArgument("gap_days must be positive".into()));
        }
        Ok(())
    }

    pub fn second_crawl_date(&self) -> NaiveDate {
        self.crawl_date + Days::new(self.gap_days)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub user_id: u64,
    pub group: Group,
    pub linear_predictor: f64,
    pub p_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub first: Vec<RawProfile>,
    pub second: Vec<RawProfile>,
    pub truth: Vec<TruthRow>,
    pub first_crawl: NaiveDate,
    pub second_crawl: NaiveDate,
}

/// First user id handed out.
pub const USER_ID_BASE: u64 = 100_000;

struct Pools<'a> {
    names: Vec<&'a str>,
    /// Words that are not also given names.
    words: Vec<&'a str>,
    lexicon: &'a NameLexicon,
    wordlist: &'a WordList,
}

const SEPARATORS: [&str; 5] = [" ", " ", "_", ".", " | "];
const NON_LATIN: [&str; 8] = ["火星人", "Дмитрий", "Δημήτρης", "محمد", "さくら", "★", "🚀", "김민준"];
const LOCATIONS: [&str; 6] = ["Berlin", "London, UK", "NYC", "São Paulo", "Tokyo", "somewhere"];

fn capitalise(t: &str, r: &mut Rng) -> String {
    let mut s = String::with_capacity(t.len() + 1);
    let upper = r.random_bool(0.7);
    for (i, c) in t.chars().enumerate() {
        if i == 0 && upper {
            s.push(c.to_ascii_uppercase());
        } else {
            s.push(c);
        }
    }
    s
}

/// Same letters after folding: swaps one vowel for an accented form.
fn accent(t: &str, r: &mut Rng) -> String {
    let positions: Vec<usize> = t.char_indices().filter(|(_, c)| "aeiou".contains(*c)).map(|(i, _)| i).collect();
    if positions.is_empty() {
        return t.to_string();
    }
    let at = positions[r.random_range(0..positions.len())];
    let mut s = String::new();
    for (i, c) in t.char_indices() {
        if i == at {
            s.push(match c {
                'a' => 'á',
                'e' => 'é',
                'i' => 'í',
                'o' => 'ö',
                _ => 'ü',
            });
        } else {
            s.push(c);
        }
    }
    s
}

fn gibberish(r: &mut Rng, pools: &Pools<'_>) -> String {
    const CONS: &[u8] = b"bcdfghjklmnpqrstvwxz";
    const VOW: &[u8] = b"aeiouy";
    loop {
        let len = r.random_range(4..=8);
        let s: String = (0..len)
            .map(|i| {
                let set = if i % 3 == 1 { VOW } else { CONS };
                set[r.random_range(0..set.len())] as char
            })
            .collect();
        if !pools.lexicon.contains(&s) && !pools.wordlist.contains(&s) {
            return s;
        }
    }
}

fn pick<'a>(r: &mut Rng, v: &[&'a str]) -> &'a str {
    v[r.random_range(0..v.len())]
}

fn join(tokens: Vec<String>, r: &mut Rng) -> String {
    let sep = SEPARATORS[r.random_range(0..SEPARATORS.len())];
    tokens.join(sep)
}

fn name_field(group: Group, shape: &NameShape, pools: &Pools<'_>, r: &mut Rng) -> String {
    match group {
        Group::ContainsName => {
            let mut t = vec![pick(r, &pools.names).to_string()];
            if r.random_bool(0.5) {
                t.push(pick(r, &pools.names).to_string());
            }
            if r.random_bool(0.3) && !pools.words.is_empty() {
                t.push(pick(r, &pools.words).to_string());
            }
            if r.random_bool(0.2) {
                t.push(gibberish(r, pools));
            }
            let t: Vec<String> = t
                .into_iter()
                .map(|s| {
                    let s = if r.random_bool(0.1) { accent(&s, r) } else { s };
                    capitalise(&s, r)
                })
                .collect();
            join(t, r)
        }
        Group::ContainsWords => {
            let nw = r.random_range(shape.words_min..=shape.words_max);
            let ng = shape.gibberish_choices[r.random_range(0..shape.gibberish_choices.len())];
            let mut t: Vec<String> = (0..nw).map(|_| pick(r, &pools.words).to_string()).collect();
            t.extend((0..ng).map(|_| gibberish(r, pools)));
            // Shuffle so words are not always first.
            for i in (1..t.len()).rev() {
                let j = r.random_range(0..=i);
                t.swap(i, j);
            }
            let t = t.into_iter().map(|s| capitalise(&s, r)).collect();
            join(t, r)
        }
        Group::CustomContent => match r.random_range(0..4) {
            0 => join((0..r.random_range(1..=2)).map(|_| capitalise(&gibberish(r, pools), r)).collect(), r),
            1 => format!("{} {}", NON_LATIN[r.random_range(0..NON_LATIN.len())], r.random_range(0..3000)),
            2 => format!("{}{}", gibberish(r, pools), r.random_range(1..100)),
            _ => format!("{} {}", NON_LATIN[r.random_range(0..NON_LATIN.len())], capitalise(&gibberish(r, pools), r)),
        },
    }
}

fn description(pools: &Pools<'_>, r: &mut Rng) -> String {
    let mut parts: Vec<String> = Vec::new();
    let n_words = r.random_range(2..=8);
    let all_words: Vec<&str> = if pools.words.is_empty() { vec!["hello"] } else { pools.words.clone() };
    for _ in 0..n_words {
        parts.push(pick(r, &all_words).to_string());
    }
    let urls = match r.random_range(0..100) {
        0..=92 => 0,
        93..=98 => 1,
        _ => 2,
    };
    for k in 0..urls {
        parts.push(format!("https://t.co/{}{k}", gibberish(r, pools)));
    }
    let tags = match r.random_range(0..100) {
        0..=87 => 0,
        88..=94 => 1,
        95..=97 => 2,
        _ => 3,
    };
    for _ in 0..tags {
        parts.push(format!("#{}", pick(r, &all_words)));
    }
    parts.join(" ")
}

struct Record {
    first: RawProfile,
    second: Option<RawProfile>,
    truth: TruthRow,
}

fn record(i: usize, cfg: &GeneratorConfig, dense: &[Vec<f64>; 3], pools: &Pools<'_>, ctx: &CrawlContext) -> Result<Record> {
    let r = &mut rng::stream(rng::derive(cfg.seed, &[i as u64]), 0);
    let u: f64 = r.random();
    let group = if u < cfg.proportions[0] {
        Group::ContainsName
    } else if u < cfg.proportions[0] + cfg.proportions[1] {
        Group::ContainsWords
    } else {
        Group::CustomContent
    };
    let group = if cfg.proportions[group.index()] == 0.0 {
        // Rounding at the upper edge; fall back to the last used group.
        *Group::ALL.iter().rev().find(|g| cfg.proportions[g.index()] > 0.0).expect("proportions sum to 1")
    } else {
        group
    };

    let age_days = {
        let d = Normal::new(2720.0, 77.0).expect("valid normal");
        libm::round(d.sample(r)).clamp(334.0, 3817.0) as u64
    };
    let inactivity = (cfg.counts.inactivity.sample(r)?.min(365.0) as u64).min(age_days);
    let created_at = cfg.crawl_date - Days::new(age_days);
    let last_tweet_at = cfg.crawl_date - Days::new(inactivity);
    let followers = cfg.counts.followers.sample(r)? as u64;

    let first = RawProfile {
        user_id: USER_ID_BASE + i as u64,
        name_field: name_field(group, &cfg.names, pools, r),
        screen_name: format!("user{i}"),
        description: r.random_bool(0.75).then(|| description(pools, r)),
        location: r.random_bool(0.55).then(|| LOCATIONS[r.random_range(0..LOCATIONS.len())].to_string()),
        url: r.random_bool(0.35).then(|| format!("https://example.org/{i}")),
        followers_count: followers,
        friends_count: cfg.counts.friends.sample(r)? as u64,
        tweet_count: cfg.counts.tweets.sample(r)? as u64,
        favorited_count: cfg.counts.favorited.sample(r)? as u64,
        listed_count: cfg.counts.listed.sample(r)? as u64,
        utc_offset_hours: r.random_bool(0.6).then(|| r.random_range(-12..=14)),
        default_profile: r.random_bool(0.35),
        default_profile_image: r.random_bool(0.08),
        created_at,
        last_tweet_at: Some(last_tweet_at),
        protected: false,
        verified: false,
    };

    let x = encode(&first, group, ctx, pools.lexicon, pools.wordlist)?;
    let coef = &cfg.coefficients[group.index()];
    let eta = coef.intercept + dense[group.index()].iter().zip(&x).map(|(b, v)| b * v).sum::<f64>();
    let p = sigmoid(eta);
    let increased = r.random::<f64>() < p;
    let followers_second = if increased {
        let e = Exp::new(1.0 / (1.0 + 0.02 * followers as f64)).expect("positive rate");
        followers + 1 + libm::floor(e.sample(r)) as u64
    } else if r.random_bool(0.5) {
        followers
    } else {
        let e = Exp::new(1.0 / (1.0 + 0.01 * followers as f64)).expect("positive rate");
        followers - (libm::floor(e.sample(r)) as u64).min(followers)
    };
    let second = (!r.random_bool(cfg.attrition)).then(|| RawProfile {
        followers_count: followers_second,
        ..first.clone()
    });
    Ok(Record {
        truth: TruthRow {
            user_id: first.user_id,
            group,
            linear_predictor: eta,
            p_true: p,
        },
        first,
        second,
    })
}

fn pools<'a>(lexicon: &'a NameLexicon, words: &'a WordList, cfg: &GeneratorConfig) -> Result<Pools<'a>> {
    let names: Vec<&str> = lexicon.entries().map(|e| e.name()).collect();
    let plain: Vec<&str> = words.iter().filter(|w| !lexicon.contains(w)).collect();
    if cfg.proportions[Group::ContainsName.index()] > 0.0 && names.is_empty() {
        return Err(Error::Empty("name lexicon"));
    }
    if cfg.proportions[Group::ContainsWords.index()] > 0.0 && plain.is_empty() {
        return Err(Error::Empty("wordlist entries that are not names"));
    }
    Ok(Pools {
        names,
        words: plain,
        lexicon,
        wordlist: words,
    })
}

/// Generates both snapshots and the truth table.
pub fn generate<E: Executor>(cfg: &GeneratorConfig, lexicon: &NameLexicon, words: &WordList, exec: &E) -> Result<SynthOutput> {
    cfg.validate()?;
    let pools = pools(lexicon, words, cfg)?;
    let dense = [
        cfg.coefficients[0].dense(Group::ALL[0])?,
        cfg.coefficients[1].dense(Group::ALL[1])?,
        cfg.coefficients[2].dense(Group::ALL[2])?,
    ];
    let ctx = CrawlContext::new(cfg.crawl_date);
    let records = exec.map(cfg.n_profiles, |i| record(i, cfg, &dense, &pools, &ctx));
    let mut out = SynthOutput {
        first: Vec::with_capacity(cfg.n_profiles),
        second: Vec::with_capacity(cfg.n_profiles),
        truth: Vec::with_capacity(cfg.n_profiles),
        first_crawl: cfg.crawl_date,
        second_crawl: cfg.second_crawl_date(),
    };
    for rec in records {
        let rec = rec?;
        out.first.push(rec.first);
        out.second.extend(rec.second);
        out.truth.push(rec.truth);
    }
    Ok(out)
}

/// Sets each group's intercept so that the mean planted probability over a
/// pilot sample of that group is `target`.
pub fn calibrate_intercepts<E: Executor>(
    cfg: &mut GeneratorConfig,
    lexicon: &NameLexicon,
    words: &WordList,
    target: f64,
    pilot: usize,
    exec: &E,
) -> Result<()> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument("target prevalence must lie in (0, 1)".into()));
    }
    for g in Group::ALL {
        let mut pilot_cfg = cfg.clone();
        pilot_cfg.n_profiles = pilot;
        pilot_cfg.seed = rng::derive(cfg.seed, &[0xCA11, g.index() as u64]);
        pilot_cfg.proportions = [0.0; 3];
        pilot_cfg.proportions[g.index()] = 1.0;
        pilot_cfg.coefficients[g.index()].intercept = 0.0;
        let out = generate(&pilot_cfg, lexicon, words, exec)?;
        let eta: Vec<f64> = out.truth.iter().map(|t| t.linear_predictor).collect();
        let mean_p = |b: f64| eta.iter().map(|e| sigmoid(e + b)).sum::<f64>() / eta.len() as f64;
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_p(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        cfg.coefficients[g.index()].intercept = 0.5 * (lo + hi);
    }
    Ok(())
}

/// Expected AUC of the true probabilities when labels are drawn from them:
/// the Bayes-optimal AUC of the generator over this sample of profiles.
pub fn bayes_auc(p: &[f64]) -> f64 {
    let mut s: Vec<f64> = p.to_vec();
    s.sort_by(f64::total_cmp);
    // Sum over ordered pairs i != j of p_i (1 - p_j) [s_i > s_j] (+1/2 on ties).
    let mut below_neg = 0.0; // Σ (1 - p_j) over strictly smaller scores
    let mut num = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let k = (j - i) as f64;
        let v = s[i];
        // Within a tie block: pairs (a != b) contribute v (1 - v) / 2 each.
        num += k * v * below_neg + 0.5 * k * (k - 1.0) * v * (1.0 - v);
        below_neg += k * (1.0 - v);
        i = j;
    }
    let sp: f64 = s.iter().sum();
    let sn: f64 = s.iter().map(|v| 1.0 - v).sum();
    let diag: f64 = s.iter().map(|v| v * (1.0 - v)).sum();
    num / (sp * sn - diag)
}
