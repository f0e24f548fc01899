//! Profile snapshots: filtering, two-snapshot labelling and stratified splits.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{describe, Descriptive};

/// Accounts silent for longer than this are dropped.
pub const MAX_INACTIVITY_DAYS: i64 = 365;

/// One user's profile as seen by one crawl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawProfile {
    pub user_id: u64,
    pub name_field: String,
    pub screen_name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub url: Option<String>,
    pub followers_count: u64,
    pub friends_count: u64,
    pub tweet_count: u64,
    pub favorited_count: u64,
    pub listed_count: u64,
    #[serde(default)]
    pub utc_offset_hours: Option<i32>,
    pub default_profile: bool,
    pub default_profile_image: bool,
    pub created_at: NaiveDate,
    #[serde(default)]
    pub last_tweet_at: Option<NaiveDate>,
    pub protected: bool,
    pub verified: bool,
}

impl RawProfile {
    /// Checks the per-record invariants against the crawl that produced it.
    pub fn validate(&self, ctx: &CrawlContext) -> Result<()> {
        if let Some(off) = self.utc_offset_hours {
            if !(-12..=14).contains(&off) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "user {}: utc_offset_hours {off} outside -12..=14",
                    self.user_id
                )));
            }
        }
        if self.created_at > ctx.crawl_date {
            return Err(Error::InvalidArgument(alloc::format!(
                "user {}: created_at {} after crawl date {}",
                self.user_id,
                self.created_at,
                ctx.crawl_date
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlContext {
    pub crawl_date: NaiveDate,
}

impl CrawlContext {
    pub fn new(crawl_date: NaiveDate) -> Self {
        Self { crawl_date }
    }

    /// Whole days from `date` to the crawl date.
    pub fn days_since(&self, date: NaiveDate) -> i64 {
        (self.crawl_date - date).num_days()
    }

    /// Days since the last tweet; `None` when the account never tweeted.
    pub fn inactivity(&self, p: &RawProfile) -> Option<i64> {
        p.last_tweet_at.map(|d| self.days_since(d))
    }
}

/// Whether a profile survives the sample filter: not protected, not verified,
/// and tweeted within the last year.
pub fn passes_filter(p: &RawProfile, ctx: &CrawlContext) -> bool {
    !p.protected
        && !p.verified
        && ctx
            .inactivity(p)
            .is_some_and(|days| days <= MAX_INACTIVITY_DAYS)
}

pub fn filter_profiles(profiles: &[RawProfile], ctx: &CrawlContext) -> Vec<RawProfile> {
    profiles.iter().filter(|p| passes_filter(p, ctx)).cloned().collect()
}

/// A first-snapshot profile together with its follower count in the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledProfile {
    pub profile: RawProfile,
    pub followers_second: u64,
    pub increased: bool,
    pub absolute_change: i64,
    pub relative_change: f64,
}

impl LabeledProfile {
    pub fn new(profile: RawProfile, followers_second: u64) -> Self {
        let first = profile.followers_count;
        let relative_change = if first > 0 {
            followers_second as f64 / first as f64
        } else {
            0.0
        };
        Self {
            increased: followers_second > first,
            absolute_change: followers_second as i64 - first as i64,
            relative_change,
            followers_second,
            profile,
        }
    }

    /// Checks that the derived fields agree with the two counts.
    pub fn is_consistent(&self) -> bool {
        *self == LabeledProfile::new(self.profile.clone(), self.followers_second)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joined {
    pub labeled: Vec<LabeledProfile>,
    /// Users of the first snapshot missing from the second.
    pub attrition: usize,
}

fn index_by_id<'a>(list: &'a [RawProfile], name: &'static str) -> Result<BTreeMap<u64, &'a RawProfile>> {
    let mut map = BTreeMap::new();
    for p in list {
        if map.insert(p.user_id, p).is_some() {
            return Err(Error::DuplicateUserId {
                user_id: p.user_id,
                list: name,
            });
        }
    }
    Ok(map)
}

/// Labels every user present in both snapshots, in first-snapshot order.
pub fn join_snapshots(first: &[RawProfile], second: &[RawProfile]) -> Result<Joined> {
    index_by_id(first, "first")?;
    let second = index_by_id(second, "second")?;
    let mut labeled = Vec::with_capacity(first.len().min(second.len()));
    let mut attrition = 0;
    for p in first {
        match second.get(&p.user_id) {
            Some(later) => labeled.push(LabeledProfile::new(p.clone(), later.followers_count)),
            None => attrition += 1,
        }
    }
    Ok(Joined { labeled, attrition })
}

/// Splits indices `0..labels.len()` so that each class is divided in the
/// given ratio. Returned index lists are ascending.
pub fn stratified_partition(labels: &[bool], ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::TooFewPerClass {
            needed: 2,
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for (class, members) in [&mut pos, &mut neg].into_iter().enumerate() {
        let mut r = rng::stream(seed, class as u64);
        members.shuffle(&mut r);
        let take = libm::round(ratio * members.len() as f64) as usize;
        train.extend_from_slice(&members[..take]);
        eval.extend_from_slice(&members[take..]);
    }
    train.sort_unstable();
    eval.sort_unstable();
    Ok((train, eval))
}

pub fn stratified_split(
    labeled: &[LabeledProfile],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<LabeledProfile>, Vec<LabeledProfile>)> {
    let labels: Vec<bool> = labeled.iter().map(|l| l.increased).collect();
    let (a, b) = stratified_partition(&labels, ratio, seed)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| labeled[i].clone()).collect();
    Ok((pick(a), pick(b)))
}

/// Descriptive statistics of the follower counts across both snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSummary {
    pub first: Descriptive,
    pub second: Descriptive,
    pub absolute_change: Descriptive,
    pub relative_change: Descriptive,
    pub increased: usize,
    pub increased_percent: f64,
}

pub fn describe_changes(labeled: &[LabeledProfile]) -> Result<ChangeSummary> {
    if labeled.is_empty() {
        return Err(Error::Empty("labeled profiles"));
    }
    let col = |f: fn(&LabeledProfile) -> f64| -> Vec<f64> { labeled.iter().map(f).collect() };
    let increased = labeled.iter().filter(|l| l.increased).count();
    Ok(ChangeSummary {
        first: describe(&col(|l| l.profile.followers_count as f64))?,
        second: describe(&col(|l| l.followers_second as f64))?,
        absolute_change: describe(&col(|l| l.absolute_change as f64))?,
        relative_change: describe(&col(|l| l.relative_change))?,
        increased,
        increased_percent: 100.0 * increased as f64 / labeled.len() as f64,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    pub(crate) fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    pub(crate) fn profile(id: u64, followers: u64) -> RawProfile {
        RawProfile {
            user_id: id,
            name_field: "John Runner".to_string(),
            screen_name: alloc::format!("user{id}"),
            description: Some("hello".to_string()),
            location: None,
            url: None,
            followers_count: followers,
            friends_count: 10,
            tweet_count: 100,
            favorited_count: 5,
            listed_count: 1,
            utc_offset_hours: Some(-5),
            default_profile: false,
            default_profile_image: false,
            created_at: date("2009-05-01"),
            last_tweet_at: Some(date("2016-09-01")),
            protected: false,
            verified: false,
        }
    }

    fn ctx() -> CrawlContext {
        CrawlContext::new(date("2016-10-02"))
    }

    #[test]
    fn filter_rules_and_boundary() {
        let c = ctx();
        let mut p = profile(1, 10);
        assert!(passes_filter(&p, &c));
        p.protected = true;
        assert!(!passes_filter(&p, &c));

        let mut v = profile(2, 10);
        v.verified = true;
        v.last_tweet_at = Some(date("2016-10-01"));
        assert!(!passes_filter(&v, &c));

        let mut edge = profile(3, 10);
        edge.last_tweet_at = Some(c.crawl_date - chrono::Duration::days(365));
        assert!(passes_filter(&edge, &c));
        edge.last_tweet_at = Some(c.crawl_date - chrono::Duration::days(366));
        assert!(!passes_filter(&edge, &c));
        edge.last_tweet_at = None;
        assert!(!passes_filter(&edge, &c));
    }

    #[test]
    fn join_labels_and_attrition() {
        let first = vec![profile(1, 100), profile(2, 100), profile(3, 50)];
        let second = vec![profile(2, 100), profile(1, 110)];
        let j = join_snapshots(&first, &second).unwrap();
        assert_eq!(j.attrition, 1);
        assert_eq!(j.labeled.len(), 2);
        let a = &j.labeled[0];
        assert_eq!((a.profile.user_id, a.increased, a.absolute_change), (1, true, 10));
        assert!((a.relative_change - 1.1).abs() < 1e-15);
        let b = &j.labeled[1];
        assert_eq!((b.increased, b.absolute_change), (false, 0));
    }

    #[test]
    fn join_rejects_duplicates() {
        let first = vec![profile(1, 1), profile(1, 2)];
        assert_eq!(
            join_snapshots(&first, &[]),
            Err(Error::DuplicateUserId { user_id: 1, list: "first" })
        );
    }

    #[test]
    fn relative_change_of_zero_followers_is_zero() {
        let l = LabeledProfile::new(profile(1, 0), 5);
        assert!(l.increased);
        assert_eq!(l.relative_change, 0.0);
        assert!(l.is_consistent());
    }

    #[test]
    fn split_preserves_class_ratio() {
        let labels: Vec<bool> = (0..100).map(|i| i < 44).collect();
        let (a, b) = stratified_partition(&labels, 0.5, 9).unwrap();
        assert_eq!(a.iter().filter(|&&i| labels[i]).count(), 22);
        assert_eq!(b.iter().filter(|&&i| labels[i]).count(), 22);
        assert_eq!(a.len() + b.len(), 100);
        assert_eq!(stratified_partition(&labels, 0.5, 9).unwrap(), (a, b));
    }

    #[test]
    fn split_errors() {
        assert!(matches!(
            stratified_partition(&[true, false, false], 0.5, 1),
            Err(Error::TooFewPerClass { .. })
        ));
        assert!(stratified_partition(&[true, true, false, false], 1.0, 1).is_err());
    }

    #[test]
    fn describe_changes_counts_flags() {
        let labeled: Vec<_> = [(100, 110), (100, 100), (0, 0), (10, 5)]
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| LabeledProfile::new(profile(i as u64, a), b))
            .collect();
        let s = describe_changes(&labeled).unwrap();
        assert_eq!(s.increased, 1);
        assert_eq!(s.increased_percent, 25.0);
        assert_eq!(s.absolute_change.min, -5.0);
        assert_eq!(s.relative_change.min, 0.0);
        assert!(describe_changes(&[]).is_err());
    }
}
