//! Line-oriented record files.
//!
//! A snapshot file holds one JSON object per line. The first line may be a
//! header carrying the crawl date:
//!
//! ```text
//! {"#snapshot":1,"crawl_date":"2016-10-10"}
//! {"user_id":100000,"name_field":"Anna Smith",...}
//! ```
//!
//! Labeled files use the same layout with a `#labeled` header (which is
//! mandatory) and one labeled profile per line.
//!
//! Malformed records never abort a read: each one is skipped and reported
//! with its line number. Only IO failures, a bad header or conflicting crawl
//! dates are fatal.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use followcast_core::{CrawlContext, LabeledProfile, RawProfile};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// A record type with its own header key and per-record checks.
pub trait Record: Serialize + DeserializeOwned {
    /// Reserved header key, e.g. `#snapshot`.
    const HEADER_KEY: &'static str;
    /// Whether a file of this kind must start with a header.
    const HEADER_REQUIRED: bool;

    fn user_id(&self) -> u64;

    /// Invariants that need the crawl date, when it is known.
    fn check(&self, ctx: Option<&CrawlContext>) -> std::result::Result<(), String>;
}

impl Record for RawProfile {
    const HEADER_KEY: &'static str = "#snapshot";
    const HEADER_REQUIRED: bool = false;

    fn user_id(&self) -> u64 {
        self.user_id
    }

    fn check(&self, ctx: Option<&CrawlContext>) -> std::result::Result<(), String> {
        match ctx {
            Some(ctx) => self.validate(ctx).map_err(|e| e.to_string()),
            None => Ok(()),
        }
    }
}

impl Record for LabeledProfile {
    const HEADER_KEY: &'static str = "#labeled";
    const HEADER_REQUIRED: bool = true;

    fn user_id(&self) -> u64 {
        self.profile.user_id
    }

    fn check(&self, ctx: Option<&CrawlContext>) -> std::result::Result<(), String> {
        if !self.is_consistent() {
            return Err("increased/absolute_change/relative_change disagree with the follower counts".into());
        }
        self.profile.check(ctx)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Malformed {
    /// 1-based, counting the header.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub crawl_date: Option<NaiveDate>,
    pub records: Vec<T>,
    pub malformed: Vec<Malformed>,
}

impl<T> Parsed<T> {
    pub fn context(&self) -> Option<CrawlContext> {
        self.crawl_date.map(CrawlContext::new)
    }
}

pub type Snapshot = Parsed<RawProfile>;
pub type Labeled = Parsed<LabeledProfile>;

fn header_line(key: &str, crawl_date: NaiveDate) -> String {
    // Written by hand so the reserved key always comes first.
    format!(
        "{{{}:{FORMAT_VERSION},\"crawl_date\":\"{}\"}}",
        serde_json::to_string(key).expect("string serializes"),
        crawl_date.format("%Y-%m-%d")
    )
}

#[derive(Deserialize)]
struct HeaderIn {
    crawl_date: NaiveDate,
    #[serde(flatten)]
    rest: HashMap<String, serde_json::Value>,
}

/// Header keys of every known file kind.
const KNOWN_HEADERS: [&str; 2] = [<RawProfile as Record>::HEADER_KEY, <LabeledProfile as Record>::HEADER_KEY];

/// Parses the header if `line` is one. `Ok(None)` means an ordinary record.
fn parse_header<T: Record>(line: &str, source_name: &str) -> Result<Option<NaiveDate>> {
    let Ok(value) = serde_json::from_str::<serde_json::Value>(line) else {
        return Ok(None);
    };
    let Some(obj) = value.as_object() else {
        return Ok(None);
    };
    if let Some(other) = KNOWN_HEADERS.iter().find(|k| **k != T::HEADER_KEY && obj.contains_key(**k)) {
        return Err(Error::format(
            source_name,
            format!("found a {other} header where a {} file was expected", T::HEADER_KEY),
        ));
    }
    if !obj.contains_key(T::HEADER_KEY) {
        return Ok(None);
    }
    let header: HeaderIn = serde_json::from_value(value.clone())
        .map_err(|e| Error::line(source_name, 1, format!("bad header: {e}")))?;
    let mut version = None;
    for (k, v) in &header.rest {
        if k == T::HEADER_KEY {
            version = v.as_u64();
        } else {
            return Err(Error::line(source_name, 1, format!("unknown header key {k:?}")));
        }
    }
    match version {
        Some(v) if v == u64::from(FORMAT_VERSION) => Ok(Some(header.crawl_date)),
        _ => Err(Error::line(
            source_name,
            1,
            format!("unsupported {} version {} (this build reads {FORMAT_VERSION})", T::HEADER_KEY, obj[T::HEADER_KEY]),
        )),
    }
}

/// Reads records from `reader`. `crawl_date` supplies the crawl date when
/// the file has no header; if both are present they must agree.
pub fn parse_records<T: Record, R: BufRead>(
    mut reader: R,
    source_name: &str,
    crawl_date: Option<NaiveDate>,
) -> Result<Parsed<T>> {
    let mut out = Parsed {
        crawl_date,
        records: Vec::new(),
        malformed: Vec::new(),
    };
    let mut seen: HashMap<u64, u64> = HashMap::new();
    let mut ctx = crawl_date.map(CrawlContext::new);
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::format(source_name, format!("read failed: {e}")))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t.trim_end_matches(['\n', '\r']),
            Err(e) => {
                out.malformed.push(Malformed {
                    line: line_no,
                    reason: format!("invalid UTF-8: {e}"),
                });
                continue;
            }
        };
        if line_no == 1 {
            if let Some(date) = parse_header::<T>(text, source_name)? {
                if let Some(given) = crawl_date {
                    if given != date {
                        return Err(Error::format(
                            source_name,
                            format!("header crawl_date {date} conflicts with the supplied {given}"),
                        ));
                    }
                }
                out.crawl_date = Some(date);
                ctx = Some(CrawlContext::new(date));
                continue;
            }
            if T::HEADER_REQUIRED {
                return Err(Error::line(source_name, 1, format!("missing {} header", T::HEADER_KEY)));
            }
        }
        if text.trim().is_empty() {
            out.malformed.push(Malformed {
                line: line_no,
                reason: "blank line".into(),
            });
            continue;
        }
        let record: T = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(e) => {
                out.malformed.push(Malformed {
                    line: line_no,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if let Err(reason) = record.check(ctx.as_ref()) {
            out.malformed.push(Malformed { line: line_no, reason });
            continue;
        }
        if let Some(first) = seen.insert(record.user_id(), line_no) {
            seen.insert(record.user_id(), first);
            out.malformed.push(Malformed {
                line: line_no,
                reason: format!("duplicate user_id {} (first seen on line {first})", record.user_id()),
            });
            continue;
        }
        out.records.push(record);
    }
    Ok(out)
}

pub fn parse_snapshot<R: BufRead>(reader: R, source_name: &str, crawl_date: Option<NaiveDate>) -> Result<Snapshot> {
    parse_records(reader, source_name, crawl_date)
}

pub fn parse_labeled<R: BufRead>(reader: R, source_name: &str) -> Result<Labeled> {
    let parsed: Labeled = parse_records(reader, source_name, None)?;
    debug_assert!(parsed.crawl_date.is_some());
    Ok(parsed)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path, crawl_date: Option<NaiveDate>) -> Result<Snapshot> {
    parse_snapshot(open(path)?, &path.display().to_string(), crawl_date)
}

pub fn read_labeled(path: &Path) -> Result<Labeled> {
    parse_labeled(open(path)?, &path.display().to_string())
}

/// Header line followed by one record per line, in the given order.
pub fn write_records<T: Record, W: Write>(mut w: W, crawl_date: NaiveDate, records: &[T]) -> std::io::Result<()> {
    writeln!(w, "{}", header_line(T::HEADER_KEY, crawl_date))?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_records_file<T: Record>(path: &Path, crawl_date: NaiveDate, records: &[T]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(BufWriter::new(f), crawl_date, records).map_err(|e| Error::io(path, e))
}
