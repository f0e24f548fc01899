//! Property tests for the invariants each module promises.

use chrono::{Days, NaiveDate};
use followcast_core::features::{count_hashtags, count_urls, Scaler};
use followcast_core::ingest::{
    describe_changes, filter_profiles, join_snapshots, stratified_partition, CrawlContext, RawProfile,
};
use followcast_core::lexicon::{
    assign_group, normalize_name_field, word_fraction, Gender, Impression, NameEntry, NameLexicon, WordList,
};
use followcast_core::logreg::{log_likelihood, score, WaldRow};
use followcast_core::models::{auc, fit_knn, stratified_folds};
use followcast_core::stats::{chi2_sf, f_sf, normal_cdf, one_way_anova, percentile_sorted, studentized_range_sf, tukey_kramer};
use followcast_core::Matrix;
use proptest::prelude::*;

fn crawl() -> NaiveDate {
    NaiveDate::from_ymd_opt(2016, 10, 1).unwrap()
}

fn profile(id: u64, followers: u64, inactive: Option<u64>, protected: bool, verified: bool) -> RawProfile {
    RawProfile {
        user_id: id,
        name_field: format!("user {id}"),
        screen_name: format!("u{id}"),
        description: None,
        location: None,
        url: None,
        followers_count: followers,
        friends_count: 1,
        tweet_count: 1,
        favorited_count: 0,
        listed_count: 0,
        utc_offset_hours: None,
        default_profile: false,
        default_profile_image: false,
        created_at: crawl() - Days::new(800),
        last_tweet_at: inactive.map(|d| crawl() - Days::new(d)),
        protected,
        verified,
    }
}

fn arb_profile() -> impl Strategy<Value = RawProfile> {
    (0u64..50, 0u64..500, proptest::option::of(0u64..800), any::<bool>(), any::<bool>())
        .prop_map(|(id, f, i, p, v)| profile(id, f, i, p && id % 3 == 0, v && id % 5 == 0))
}

fn resources() -> (NameLexicon, WordList) {
    let mut lex = NameLexicon::new();
    for (n, g) in [("anna", Gender::Female), ("john", Gender::Male), ("kim", Gender::Both)] {
        lex.insert(NameEntry::new(n, g, [Impression::Good].into_iter().collect()).unwrap());
    }
    (lex, WordList::new(["happy", "cat", "trader", "music", "kim"]).unwrap())
}

proptest! {
    #[test]
    fn filter_is_idempotent(ps in proptest::collection::vec(arb_profile(), 0..60)) {
        let ctx = CrawlContext::new(crawl());
        let once = filter_profiles(&ps, &ctx);
        prop_assert_eq!(filter_profiles(&once, &ctx), once.clone());
        prop_assert!(once.iter().all(|p| !p.protected && !p.verified));
    }

    #[test]
    fn join_counts_match_recount(
        a in proptest::collection::btree_map(0u64..300, 0u64..100, 0..200),
        b in proptest::collection::btree_map(0u64..300, 0u64..100, 0..200),
    ) {
        let first: Vec<RawProfile> = a.iter().map(|(&id, &f)| profile(id, f, Some(1), false, false)).collect();
        let second: Vec<RawProfile> = b.iter().map(|(&id, &f)| profile(id, f, Some(1), false, false)).collect();
        let joined = join_snapshots(&first, &second).unwrap();
        prop_assert!(joined.labeled.len() <= first.len().min(second.len()));
        let both = a.keys().filter(|k| b.contains_key(k)).count();
        prop_assert_eq!(joined.labeled.len(), both);
        prop_assert_eq!(joined.attrition, first.len() - both);
        let rises = a.iter().filter(|(k, v)| b.get(k).is_some_and(|w| w > v)).count();
        prop_assert_eq!(joined.labeled.iter().filter(|l| l.increased).count(), rises);
        prop_assert!(joined.labeled.iter().all(|l| l.is_consistent()));
    }

    #[test]
    fn split_partitions_and_stratifies(labels in proptest::collection::vec(any::<bool>(), 4..400), seed in any::<u64>(), ratio in 0.1f64..0.9) {
        let pos = labels.iter().filter(|&&b| b).count();
        prop_assume!(pos >= 2 && labels.len() - pos >= 2);
        let (train, eval) = stratified_partition(&labels, ratio, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&eval).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let tp = train.iter().filter(|&&i| labels[i]).count() as f64;
        // Positives in the training part are within one record of ratio * total.
        prop_assert!((tp - ratio * pos as f64).abs() <= 1.0);
        prop_assert_eq!(stratified_partition(&labels, ratio, seed).unwrap(), (train, eval));
    }

    #[test]
    fn describe_median_matches_sort(counts in proptest::collection::vec((0u64..10_000, 0u64..10_000), 1..300)) {
        let labeled: Vec<_> = counts
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| followcast_core::LabeledProfile::new(profile(i as u64, a, Some(1), false, false), b))
            .collect();
        let s = describe_changes(&labeled).unwrap();
        let mut v: Vec<f64> = counts.iter().map(|c| c.0 as f64).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        prop_assert_eq!(s.first.median, median);
        prop_assert_eq!(percentile_sorted(&v, 0.5), median);
    }

    #[test]
    fn normalize_yields_lowercase_ascii_and_is_idempotent(s in "\\PC{0,40}") {
        let t = normalize_name_field(&s);
        prop_assert!(t.iter().all(|w| !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase())));
        prop_assert_eq!(normalize_name_field(&t.join(" ")), t);
    }

    #[test]
    fn group_ignores_token_order(tokens in proptest::collection::vec(prop_oneof![
        Just("Anna".to_string()), Just("happy".to_string()), Just("Kim".to_string()), Just("xqz".to_string()),
        "[a-zA-Z]{1,6}", "[0-9]{1,3}",
    ], 0..6), seed in any::<u64>()) {
        let (lex, words) = resources();
        let mut shuffled = tokens.clone();
        let mut r = followcast_core::rng::stream(seed, 0);
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut r);
        prop_assert_eq!(assign_group(&tokens.join(" "), &lex, &words), assign_group(&shuffled.join(" "), &lex, &words));
    }

    #[test]
    fn word_fraction_bounds(tokens in proptest::collection::vec("[a-z]{1,6}", 0..8), k in 1usize..5) {
        let (_, words) = resources();
        let wf = word_fraction(&tokens, &words);
        prop_assert!((0.0..=1.0).contains(&wf));
        let all_words: Vec<&str> = ["cat", "happy", "music"].iter().cycle().take(k).copied().collect();
        prop_assert_eq!(word_fraction(&all_words, &words), 1.0);
    }

    #[test]
    fn description_counters_match_regex(s in "((https?://|#|##|http|x|é|٣|\\s|[a-z!.,]){0,12})") {
        let url = regex::Regex::new(r"https?://\S+").unwrap();
        let tag = regex::Regex::new(r"#[\p{Alphabetic}\p{N}]").unwrap();
        prop_assert_eq!(count_urls(&s), url.find_iter(&s).count());
        prop_assert_eq!(count_hashtags(&s), tag.find_iter(&s).count());
    }

    #[test]
    fn anova_is_shift_and_scale_invariant(
        g in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 2..20), 2..5),
        shift in -1e3f64..1e3,
        scale in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
    ) {
        let base = one_way_anova(&g).unwrap();
        prop_assume!(base.ms_within > 1e-6);
        let moved: Vec<Vec<f64>> = g.iter().map(|v| v.iter().map(|x| x * scale + shift).collect()).collect();
        let other = one_way_anova(&moved).unwrap();
        prop_assert!((other.f_value - base.f_value).abs() <= 1e-9 * base.f_value.abs().max(1e-3), "{} vs {}", other.f_value, base.f_value);
        prop_assert!((base.ss_total - base.ss_between - base.ss_within).abs() <= 1e-6 * base.ss_total.max(1.0));
    }

    #[test]
    fn tukey_p_falls_as_difference_grows(d1 in 0.0f64..5.0, extra in 0.01f64..5.0, n in 3usize..15) {
        let base: Vec<f64> = (0..n).map(|i| (i % 3) as f64).collect();
        let p_of = |d: f64| {
            let groups = [(0, base.clone()), (1, base.iter().map(|x| x + d).collect::<Vec<_>>()), (2, base.clone())];
            let values: Vec<Vec<f64>> = groups.iter().map(|g| g.1.clone()).collect();
            let a = one_way_anova(&values).unwrap();
            tukey_kramer(&groups, &a).unwrap()[0].p_value
        };
        prop_assert!(p_of(d1 + extra) <= p_of(d1) + 1e-12);
    }

    #[test]
    fn survival_functions_are_monotone(x in 0.0f64..50.0, dx in 0.001f64..10.0, d1 in 1.0f64..50.0, d2 in 1.0f64..500.0, k in 2usize..8) {
        let pairs = [
            (chi2_sf(x, d1).unwrap(), chi2_sf(x + dx, d1).unwrap()),
            (f_sf(x, d1, d2).unwrap(), f_sf(x + dx, d1, d2).unwrap()),
            (1.0 - normal_cdf(x - 25.0), 1.0 - normal_cdf(x + dx - 25.0)),
            (studentized_range_sf(x / 5.0, k, d2).unwrap(), studentized_range_sf((x + dx) / 5.0, k, d2).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            prop_assert!(b <= a + 1e-9, "{} then {}", a, b);
        }
    }

    #[test]
    fn auc_equals_brute_force_and_ignores_monotone_maps(
        pts in proptest::collection::vec((0u8..20, any::<bool>()), 2..300),
    ) {
        let scores: Vec<f64> = pts.iter().map(|p| f64::from(p.0) / 7.0).collect();
        let labels: Vec<bool> = pts.iter().map(|p| p.1).collect();
        prop_assume!(labels.iter().any(|&b| b) && labels.iter().any(|&b| !b));
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    den += 1.0;
                    num += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        let a = auc(&scores, &labels).unwrap();
        prop_assert!((a - num / den).abs() < 1e-12);
        let lin: Vec<f64> = scores.iter().map(|s| 2.0 * s + 1.0).collect();
        let cube: Vec<f64> = scores.iter().map(|s| (s - 1.0).powi(3)).collect();
        prop_assert_eq!(auc(&lin, &labels).unwrap(), a);
        prop_assert_eq!(auc(&cube, &labels).unwrap(), a);
    }

    #[test]
    fn knn_ignores_feature_permutation(
        rows in proptest::collection::vec(proptest::collection::vec(-5i8..5, 3), 5..40),
        q in proptest::collection::vec(-5i8..5, 3),
        k in 1usize..5,
    ) {
        let y: Vec<bool> = (0..rows.len()).map(|i| i % 2 == 0).collect();
        let to_m = |perm: [usize; 3]| {
            let r: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| f64::from(r[j])).collect()).collect();
            Matrix::from_rows(&r, 3).unwrap()
        };
        let perm = [2, 0, 1];
        let a = fit_knn(&to_m([0, 1, 2]), &y, k).unwrap();
        let b = fit_knn(&to_m(perm), &y, k).unwrap();
        let qa: Vec<f64> = q.iter().map(|&v| f64::from(v)).collect();
        let qb: Vec<f64> = perm.iter().map(|&j| f64::from(q[j])).collect();
        prop_assert_eq!(a.predict_proba(&qa), b.predict_proba(&qb));
    }

    #[test]
    fn cv_folds_partition_each_repeat(labels in proptest::collection::vec(any::<bool>(), 10..300), k in 2usize..10, seed in any::<u64>(), repeat in 0usize..5) {
        let folds = stratified_folds(&labels, k, seed, repeat);
        prop_assert_eq!(folds.len(), labels.len());
        prop_assert!(folds.iter().all(|&f| f < k));
        let mut sizes = vec![0usize; k];
        for &f in &folds {
            sizes[f] += 1;
        }
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn logit_gradient_matches_finite_differences(
        rows in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 3..30),
        beta in proptest::collection::vec(-1.5f64..1.5, 3),
        flips in proptest::collection::vec(any::<bool>(), 30),
    ) {
        let x = Matrix::from_rows(&rows, 2).unwrap();
        let y: Vec<bool> = flips[..rows.len()].to_vec();
        let g = score(&beta, &x, &y);
        for j in 0..3 {
            let h = 1e-5;
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (log_likelihood(&up, &x, &y) - log_likelihood(&dn, &x, &y)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "{} vs {}", fd, g[j]);
        }
    }

    #[test]
    fn wald_p_is_squared_normal_p(beta in -5.0f64..5.0, se in 0.01f64..3.0) {
        let row = WaldRow::new("x".into(), beta, se).unwrap();
        let normal = 2.0 * (1.0 - normal_cdf((beta / se).abs()));
        prop_assert!((row.p_value - normal).abs() < 1e-10);
        prop_assert!((row.odds_ratio - beta.exp()).abs() <= 1e-14 * beta.exp());
    }

    #[test]
    fn scaler_is_a_fixed_point_on_its_output(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..50)) {
        let mut rows = rows;
        for r in &mut rows {
            r[2] = 4.0;
        }
        let x = Matrix::from_rows(&rows, 3).unwrap();
        let s = Scaler::fit(&x).unwrap();
        let again = Scaler::fit(&s.apply(&x).unwrap()).unwrap();
        for j in 0..3 {
            if s.constant[j] {
                prop_assert!(again.constant[j]);
                continue;
            }
            prop_assert!(again.means[j].abs() < 1e-9);
            prop_assert!((again.sds[j] - 1.0).abs() < 1e-9);
        }
        prop_assert!(s.constant[2]);
    }
}
