//! Per-group feature schemas, extraction and standardisation.
//!
//! Core block (every group, 15 columns): account age, inactivity, four raw
//! counts, description URL and hashtag counts, five presence flags, the UTC
//! offset and its presence flag. Word-bearing groups add the word fraction;
//! the name group adds gender flags and the 28 impression flags.
//!
//! Counts enter untransformed.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CrawlContext, LabeledProfile, RawProfile};
use crate::lexicon::{self, Group, Impression, NameLexicon, WordList};
use crate::linalg::Matrix;

/// (column name, is indicator)
const CORE: [(&str, bool); 15] = [
    ("age_in_days", false),
    ("inactivity_in_days", false),
    ("tweet_count", false),
    ("favorited_count", false),
    ("friends_count", false),
    ("listed_count", false),
    ("description_url_count", false),
    ("description_hashtag_count", false),
    ("has_default_profile", true),
    ("has_default_profile_image", true),
    ("has_description", true),
    ("has_location", true),
    ("has_url", true),
    ("utc_offset_hours", false),
    ("has_utc_offset", true),
];

pub const CORE_LEN: usize = CORE.len();
pub const WORDS_LEN: usize = CORE_LEN + 1;
pub const NAME_LEN: usize = WORDS_LEN + 2 + 28;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub group: Group,
    pub feature_names: Vec<String>,
    pub indicator_mask: Vec<bool>,
}

impl FeatureSchema {
    pub fn for_group(group: Group) -> Self {
        let mut names: Vec<String> = CORE.iter().map(|(n, _)| n.to_string()).collect();
        let mut mask: Vec<bool> = CORE.iter().map(|(_, i)| *i).collect();
        if group != Group::CustomContent {
            names.push("word_fraction".into());
            mask.push(false);
        }
        if group == Group::ContainsName {
            names.push("is_male".into());
            names.push("is_female".into());
            mask.extend([true, true]);
            for imp in Impression::ALL {
                names.push(alloc::format!("impression_{}", imp.tag().replace('-', "_")));
                mask.push(true);
            }
        }
        Self {
            group,
            feature_names: names,
            indicator_mask: mask,
        }
    }

    pub fn len(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Whether this schema is the canonical one for its group.
    pub fn is_canonical(&self) -> bool {
        *self == Self::for_group(self.group)
    }
}

/// Human-readable label for a schema column, as used in reports.
pub fn display_name(column: &str) -> String {
    let fixed = match column {
        "age_in_days" => "Age in Days",
        "inactivity_in_days" => "Inactivity in Days",
        "tweet_count" => "Tweet Count",
        "favorited_count" => "Favorited Count",
        "friends_count" => "Friends Count",
        "listed_count" => "Listed Count",
        "description_url_count" => "Description URL Count",
        "description_hashtag_count" => "Description Hashtag Count",
        "has_default_profile" => "Has Default Profile",
        "has_default_profile_image" => "Has Default Profile Image",
        "has_description" => "Has Description",
        "has_location" => "Has Location",
        "has_url" => "Has URL",
        "utc_offset_hours" => "UTC Offset",
        "has_utc_offset" => "Has UTC Offset",
        "word_fraction" => "Name Contains Words",
        "is_male" => "Name is Male",
        "is_female" => "Name is Female",
        "(intercept)" => "Constant",
        other => {
            return match other.strip_prefix("impression_") {
                Some(tag) => alloc::format!("Impression: {}", tag.replace('_', "-")),
                None => other.to_string(),
            }
        }
    };
    fixed.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: bool,
}

/// Number of maximal `http://` or `https://` runs followed by at least one
/// non-whitespace character.
pub fn count_urls(text: &str) -> usize {
    let mut count = 0;
    let mut rest = text;
    while let Some(pos) = rest.find("http") {
        let tail = &rest[pos..];
        let scheme = if tail.starts_with("https://") {
            8
        } else if tail.starts_with("http://") {
            7
        } else {
            0
        };
        if scheme > 0 {
            let after = &tail[scheme..];
            if after.chars().next().is_some_and(|c| !c.is_whitespace()) {
                count += 1;
                let end = after.find(char::is_whitespace).unwrap_or(after.len());
                rest = &after[end..];
                continue;
            }
        }
        rest = &tail[4..];
    }
    count
}

/// Number of `#` immediately followed by a letter or digit.
pub fn count_hashtags(text: &str) -> usize {
    let mut chars = text.chars().peekable();
    let mut count = 0;
    while let Some(c) = chars.next() {
        if c == '#' && chars.peek().is_some_and(|n| n.is_alphanumeric()) {
            count += 1;
        }
    }
    count
}

fn present(field: &Option<String>) -> bool {
    field.as_deref().is_some_and(|s| !s.trim().is_empty())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Core block for any profile. A profile that never tweeted counts as
/// inactive for its whole lifetime.
pub fn core_features(p: &RawProfile, ctx: &CrawlContext) -> [f64; CORE_LEN] {
    let age = ctx.days_since(p.created_at);
    let inactivity = ctx.inactivity(p).unwrap_or(age);
    let description = p.description.as_deref().unwrap_or("");
    [
        age as f64,
        inactivity as f64,
        p.tweet_count as f64,
        p.favorited_count as f64,
        p.friends_count as f64,
        p.listed_count as f64,
        count_urls(description) as f64,
        count_hashtags(description) as f64,
        flag(p.default_profile),
        flag(p.default_profile_image),
        flag(present(&p.description)),
        flag(present(&p.location)),
        flag(present(&p.url)),
        p.utc_offset_hours.unwrap_or(0) as f64,
        flag(p.utc_offset_hours.is_some()),
    ]
}

/// Values under `schema` for a raw profile. Any profile can be encoded under
/// the core or word schema; the name schema needs a lexicon match.
pub fn encode(
    p: &RawProfile,
    schema: Group,
    ctx: &CrawlContext,
    lexicon: &NameLexicon,
    words: &WordList,
) -> Result<Vec<f64>> {
    let mut v = Vec::with_capacity(NAME_LEN);
    v.extend_from_slice(&core_features(p, ctx));
    if schema == Group::CustomContent {
        return Ok(v);
    }
    let tokens = lexicon::normalize_name_field(&p.name_field);
    v.push(lexicon::word_fraction(&tokens, words));
    if schema == Group::ContainsName {
        let attrs = lexicon::name_attributes(&tokens, lexicon).map_err(|_| Error::GroupMismatch {
            user_id: p.user_id,
            requested: schema,
            actual: lexicon::group_of_tokens(&tokens, lexicon, words),
        })?;
        v.push(flag(attrs.is_male));
        v.push(flag(attrs.is_female));
        v.extend(attrs.impressions.flags().iter().map(|&b| flag(b)));
    }
    Ok(v)
}

/// Feature vector of a labelled profile under its own group's schema.
/// Fails when `group` is not the profile's assigned group.
pub fn extract(
    profile: &LabeledProfile,
    group: Group,
    ctx: &CrawlContext,
    lexicon: &NameLexicon,
    words: &WordList,
) -> Result<FeatureVector> {
    let p = &profile.profile;
    let actual = lexicon::assign_group(&p.name_field, lexicon, words);
    if actual != group {
        return Err(Error::GroupMismatch {
            user_id: p.user_id,
            requested: group,
            actual,
        });
    }
    Ok(FeatureVector {
        values: encode(p, group, ctx, lexicon, words)?,
        label: profile.increased,
    })
}

/// Per-column standardisation fitted on training rows (sample SD). Constant
/// columns pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Empty("scaler training rows"));
        }
        let n = x.rows() as f64;
        let p = x.cols();
        let mut means = alloc::vec![0.0; p];
        for r in x.iter_rows() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut ss = alloc::vec![0.0; p];
        for r in x.iter_rows() {
            for j in 0..p {
                let d = r[j] - means[j];
                ss[j] += d * d;
            }
        }
        let sds: Vec<f64> = if x.rows() > 1 {
            ss.iter().map(|s| libm::sqrt(s / (n - 1.0))).collect()
        } else {
            alloc::vec![0.0; p]
        };
        let constant = (0..p)
            .map(|j| {
                let first = x[(0, j)];
                sds[j] == 0.0 || x.iter_rows().all(|r| r[j] == first)
            })
            .collect();
        Ok(Self { means, sds, constant })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            means: alloc::vec![0.0; p],
            sds: alloc::vec![1.0; p],
            constant: alloc::vec![false; p],
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.len() {
            return Err(Error::SchemaMismatch {
                expected: self.len(),
                actual: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.constant[j] {
                    v
                } else {
                    (v - self.means[j]) / self.sds[j]
                }
            })
            .collect())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = x.clone();
        for i in 0..x.rows() {
            let r = self.apply_row(x.row(i))?;
            out.row_mut(i).copy_from_slice(&r);
        }
        Ok(out)
    }

    pub fn apply_vector(&self, v: &FeatureVector) -> Result<FeatureVector> {
        Ok(FeatureVector {
            values: self.apply_row(&v.values)?,
            label: v.label,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tests::{date, profile};
    use crate::lexicon::{Gender, NameEntry};
    use alloc::vec;

    fn resources() -> (NameLexicon, WordList) {
        let mut lex = NameLexicon::new();
        lex.insert(NameEntry::new("anna", Gender::Female, [Impression::Classic].into_iter().collect()).unwrap());
        (lex, WordList::new(["happy", "trader"]).unwrap())
    }

    #[test]
    fn schema_lengths() {
        assert_eq!(FeatureSchema::for_group(Group::CustomContent).len(), 15);
        assert_eq!(FeatureSchema::for_group(Group::ContainsWords).len(), 16);
        let name = FeatureSchema::for_group(Group::ContainsName);
        assert_eq!(name.len(), NAME_LEN);
        assert_eq!(name.len(), name.indicator_mask.len());
        assert_eq!(name.index_of("impression_upper_class"), Some(28));
        assert_eq!(display_name("impression_upper_class"), "Impression: upper-class");
    }

    #[test]
    fn description_counters() {
        let d = "visit https://a.b #ai #ml";
        assert_eq!((count_urls(d), count_hashtags(d)), (1, 2));
        assert_eq!(count_urls("http:// x https://"), 0);
        assert_eq!(count_urls("http://ahttp://b https://c"), 2);
        assert_eq!(count_urls("httphttps://x"), 1);
        assert_eq!(count_hashtags("## #! #é #1 x#y #"), 3);
    }

    #[test]
    fn absent_fields_encode_as_zero() {
        let (lex, words) = resources();
        let ctx = CrawlContext::new(date("2016-10-01"));
        let mut p = profile(1, 10);
        p.description = None;
        p.location = Some("  ".into());
        p.url = None;
        p.utc_offset_hours = None;
        p.default_profile = false;
        p.default_profile_image = false;
        let v = encode(&p, Group::CustomContent, &ctx, &lex, &words).unwrap();
        assert!(v[6..15].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn extract_checks_group() {
        let (lex, words) = resources();
        let ctx = CrawlContext::new(date("2016-10-01"));
        let mut p = profile(1, 10);
        p.name_field = "Happy Trader".into();
        let lp = LabeledProfile::new(p.clone(), 11);
        let v = extract(&lp, Group::ContainsWords, &ctx, &lex, &words).unwrap();
        assert_eq!(v.values.len(), 16);
        assert_eq!(v.values[15], 1.0);
        assert!(v.label);
        assert!(matches!(
            extract(&lp, Group::ContainsName, &ctx, &lex, &words),
            Err(Error::GroupMismatch { .. })
        ));
        p.name_field = "Anna the happy".into();
        let v = encode(&p, Group::ContainsName, &ctx, &lex, &words).unwrap();
        assert_eq!(v[15], 1.0 / 3.0);
        assert_eq!((v[16], v[17]), (0.0, 1.0));
        assert_eq!(v[18 + Impression::Classic as usize], 1.0);
    }

    #[test]
    fn scaler_basis_and_constants() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [2.0, 5.0]], 2).unwrap();
        let s = Scaler::fit(&x).unwrap();
        assert_eq!(s.constant, vec![false, true]);
        let z = s.apply(&x).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((z[(0, 0)] + h).abs() < 1e-15 && (z[(1, 0)] - h).abs() < 1e-15);
        assert_eq!(z.column(1), vec![5.0, 5.0]);
        assert!(Scaler::fit(&Matrix::zeros(0, 2)).is_err());
    }
}
