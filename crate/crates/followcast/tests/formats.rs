//! File formats end to end: generated snapshots, labeled files and router
//! containers survive a write/read cycle unchanged, and damaged files fail
//! with a clear message.

use followcast::model_file::{decode_router, encode_router, load_router, save_router};
use followcast::resources::{builtin_lexicon, builtin_wordlist};
use followcast::snapshot::{parse_labeled, parse_snapshot, read_snapshot, write_records, write_records_file};
use followcast_core::ingest::{join_snapshots, CrawlContext};
use followcast_core::logreg::LogitOptions;
use followcast_core::models::{CvConfig, GbmParams, ModelSpec};
use followcast_core::router::{train_router, RouterGrids, RouterModel};
use followcast_core::synth::{generate, GeneratorConfig};
use followcast_core::{LabeledProfile, RawProfile, Serial};

fn synth(n: usize, seed: u64) -> (Vec<RawProfile>, Vec<RawProfile>, CrawlContext) {
    let cfg = GeneratorConfig::paper_defaults(n, seed);
    let out = generate(&cfg, &builtin_lexicon(), &builtin_wordlist(), &Serial).unwrap();
    (out.first, out.second, CrawlContext::new(out.first_crawl))
}

fn labeled(n: usize, seed: u64) -> (Vec<LabeledProfile>, CrawlContext) {
    let (first, second, ctx) = synth(n, seed);
    (join_snapshots(&first, &second).unwrap().labeled, ctx)
}

fn router(seed: u64) -> (RouterModel, Vec<LabeledProfile>, CrawlContext) {
    let (rows, ctx) = labeled(1_500, seed);
    let grids = RouterGrids::uniform(vec![
        ModelSpec::Logit(LogitOptions::default()),
        ModelSpec::Gbm(GbmParams {
            n_trees: 20,
            max_depth: 2,
            shrinkage: 0.1,
            min_leaf: 10,
        }),
    ]);
    let cv = CvConfig {
        k: 3,
        repeats: 1,
        seed: 1,
    };
    let m = train_router(&rows, &ctx, &builtin_lexicon(), &builtin_wordlist(), &grids, &cv, seed, &Serial).unwrap();
    (m, rows, ctx)
}

#[test]
fn generated_snapshots_round_trip() {
    let (first, _, ctx) = synth(2_000, 11);
    let mut buf = Vec::new();
    write_records(&mut buf, ctx.crawl_date, &first).unwrap();
    let parsed = parse_snapshot(&buf[..], "mem", None).unwrap();
    assert!(parsed.malformed.is_empty(), "{:?}", &parsed.malformed[..1]);
    assert_eq!(parsed.crawl_date, Some(ctx.crawl_date));
    assert_eq!(parsed.records, first);
    // Writing again gives the same bytes.
    let mut again = Vec::new();
    write_records(&mut again, ctx.crawl_date, &parsed.records).unwrap();
    assert_eq!(again, buf);
}

#[test]
fn labeled_files_round_trip_through_disk() {
    let (rows, ctx) = labeled(1_000, 12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labeled.jsonl");
    write_records_file(&path, ctx.crawl_date, &rows).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let parsed = parse_labeled(&bytes[..], "labeled.jsonl").unwrap();
    assert_eq!(parsed.records, rows);
    assert_eq!(parsed.context(), Some(ctx));
    // A labeled file is not a snapshot.
    assert!(read_snapshot(&path, None).is_err());
}

#[test]
fn damaged_lines_are_skipped_with_their_numbers() {
    let (first, _, ctx) = synth(5, 13);
    let mut buf = Vec::new();
    write_records(&mut buf, ctx.crawl_date, &first).unwrap();
    let mut text = String::from_utf8(buf).unwrap();
    let cut = text.len() - 20;
    text.truncate(cut);
    text.push_str("\n{\"user_id\": 1}\n");
    let parsed = parse_snapshot(text.as_bytes(), "mem", None).unwrap();
    assert_eq!(parsed.records.len(), 4);
    let lines: Vec<u64> = parsed.malformed.iter().map(|m| m.line).collect();
    assert_eq!(lines, [6, 7]);
}

#[test]
fn router_round_trip_is_bit_identical() {
    let (model, rows, ctx) = router(21);
    let bytes = encode_router(&model).unwrap();
    let back = decode_router(&bytes, "mem").unwrap();
    assert_eq!(back, model);
    let (lex, words) = (builtin_lexicon(), builtin_wordlist());
    let a = model.session(&lex, &words).unwrap();
    let b = back.session(&lex, &words).unwrap();
    for r in &rows {
        let pa = a.classify(&r.profile, &ctx).unwrap().probability;
        let pb = b.classify(&r.profile, &ctx).unwrap().probability;
        assert_eq!(pa.to_bits(), pb.to_bits());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("router.model");
    save_router(&path, &model).unwrap();
    assert_eq!(load_router(&path).unwrap(), model);
    assert_eq!(encode_router(&back).unwrap(), bytes);
}

#[test]
fn damaged_router_files_fail_cleanly() {
    let (model, _, _) = router(22);
    let bytes = encode_router(&model).unwrap();
    let err = |b: &[u8]| decode_router(b, "r.model").unwrap_err().to_string();

    let truncated = err(&bytes[..bytes.len() / 2]);
    assert!(truncated.contains("r.model"), "{truncated}");
    assert!(truncated.contains("truncated") || truncated.contains("sha256"), "{truncated}");

    let text = String::from_utf8(bytes.clone()).unwrap();
    let bumped = err(text.replacen("version 1", "version 7", 1).as_bytes());
    assert!(bumped.contains("unsupported router version 7"), "{bumped}");

    // Flip one digit inside the payload.
    let pos = text.rfind("0.").unwrap() + 2;
    let mut corrupt = bytes.clone();
    corrupt[pos] = if corrupt[pos] == b'1' { b'2' } else { b'1' };
    assert!(err(&corrupt).contains("sha256"));

    assert!(err(b"something else\n").contains("not a followcast router"));
    assert!(err(b"").contains("truncated"));
}

#[test]
fn fingerprint_mismatch_is_refused() {
    let (model, _, _) = router(23);
    let other = followcast::resources::parse_wordlist("apple\nbanana\n".as_bytes(), "w").unwrap();
    let Err(err) = model.session(&builtin_lexicon(), &other) else { panic!("wordlist differs") };
    assert!(err.to_string().to_lowercase().contains("word"), "{err}");
}
