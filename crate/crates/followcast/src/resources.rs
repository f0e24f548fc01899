//! Name lexicon and wordlist loaders.
//!
//! Lexicon CSV: `name,gender,impressions` with impressions separated by `;`.
//! The header row is optional and the impressions column may be omitted.
//! Wordlist: one word per line; blank lines are ignored.
//!
//! Entries are folded the same way name fields are (case, Latin diacritics),
//! so `José` is stored as `jose`. An entry that folds to anything other than
//! exactly one token can never match a whole token and is rejected.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use followcast_core::lexicon::{normalize_name_field, Gender, Impression, ImpressionSet, NameEntry};
use followcast_core::{NameLexicon, WordList};

use crate::error::{Error, Result};

pub const BUILTIN_LEXICON: &str = include_str!("../fixtures/names.csv");
pub const BUILTIN_WORDLIST: &str = include_str!("../fixtures/words.txt");

/// Label used in manifests for the embedded fixtures.
pub const BUILTIN: &str = "builtin";

fn single_token(raw: &str) -> std::result::Result<String, String> {
    let mut tokens = normalize_name_field(raw);
    match tokens.len() {
        1 => Ok(tokens.pop().expect("one token")),
        0 => Err(format!("{raw:?} contains no letters")),
        _ => Err(format!("{raw:?} folds to several tokens ({})", tokens.join(" "))),
    }
}

fn parse_row(fields: &[&str]) -> std::result::Result<Option<NameEntry>, String> {
    if !(2..=3).contains(&fields.len()) {
        return Err(format!("expected 2 or 3 columns, found {}", fields.len()));
    }
    let name = single_token(fields[0])?;
    let gender: Gender = fields[1].trim().to_ascii_lowercase().parse().map_err(|e| format!("{e}"))?;
    let mut impressions = ImpressionSet::empty();
    if let Some(tags) = fields.get(2) {
        for tag in tags.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let tag: Impression = tag.to_ascii_lowercase().parse().map_err(|e| format!("{e}"))?;
            impressions.insert(tag);
        }
    }
    NameEntry::new(&name, gender, impressions).map(Some).map_err(|e| e.to_string())
}

fn is_header(fields: &[&str]) -> bool {
    fields.first().is_some_and(|f| f.trim().eq_ignore_ascii_case("name"))
        && fields.get(1).is_some_and(|f| f.trim().eq_ignore_ascii_case("gender"))
}

/// Rows are single lines (no quoted newlines), so each line is parsed on its
/// own and errors carry the physical line number.
pub fn parse_lexicon<R: Read>(reader: R, source_name: &str) -> Result<NameLexicon> {
    let mut lexicon = NameLexicon::new();
    let mut seen_row = false;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::line(source_name, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(line.as_bytes());
        let Some(rec) = rdr.records().next() else { continue };
        let rec = rec.map_err(|e| Error::line(source_name, line_no, e.to_string()))?;
        let fields: Vec<&str> = rec.iter().collect();
        let first = !seen_row;
        seen_row = true;
        if first && is_header(&fields) {
            continue;
        }
        match parse_row(&fields) {
            Ok(Some(entry)) => lexicon.insert(entry),
            Ok(None) => {}
            Err(message) => return Err(Error::line(source_name, line_no, message)),
        }
    }
    if lexicon.is_empty() {
        return Err(Error::format(source_name, "lexicon has no entries"));
    }
    Ok(lexicon)
}

pub fn parse_wordlist<R: BufRead>(reader: R, source_name: &str) -> Result<WordList> {
    let mut words = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::line(source_name, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        words.push(single_token(&line).map_err(|m| Error::line(source_name, line_no, m))?);
    }
    WordList::new(words).map_err(|e| Error::format(source_name, e.to_string()))
}

pub fn load_lexicon(path: &Path) -> Result<NameLexicon> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(BufReader::new(f), &path.display().to_string())
}

pub fn load_wordlist(path: &Path) -> Result<WordList> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_wordlist(BufReader::new(f), &path.display().to_string())
}

pub fn builtin_lexicon() -> NameLexicon {
    parse_lexicon(BUILTIN_LEXICON.as_bytes(), "builtin names.csv").expect("embedded lexicon is valid")
}

pub fn builtin_wordlist() -> WordList {
    parse_wordlist(BUILTIN_WORDLIST.as_bytes(), "builtin words.txt").expect("embedded wordlist is valid")
}
