//! Name-field normalisation and lexicon matching.
//!
//! A name field is folded to ASCII, lower-cased and split on anything that is
//! not a letter. Whole tokens are then matched against a given-names lexicon
//! and an English wordlist to place the profile into one of three [`Group`]s.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Name-field group. Total and mutually exclusive over profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    ContainsName,
    ContainsWords,
    CustomContent,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::ContainsName, Group::ContainsWords, Group::CustomContent];

    pub fn slug(self) -> &'static str {
        match self {
            Group::ContainsName => "contains_name",
            Group::ContainsWords => "contains_words",
            Group::CustomContent => "custom_content",
        }
    }

    /// Human-readable label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Group::ContainsName => "Contains Names",
            Group::ContainsWords => "Contains Words",
            Group::CustomContent => "Custom Content",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Group::ContainsName => 0,
            Group::ContainsWords => 1,
            Group::CustomContent => 2,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.slug() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown group `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Both,
}

impl Gender {
    pub fn is_male(self) -> bool {
        matches!(self, Gender::Male | Gender::Both)
    }

    pub fn is_female(self) -> bool {
        matches!(self, Gender::Female | Gender::Both)
    }

    /// Combines two observations of the same name.
    pub fn merge(self, other: Gender) -> Gender {
        if self == other {
            self
        } else {
            Gender::Both
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Both => "both",
        }
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            "both" | "mf" | "fm" => Ok(Gender::Both),
            _ => Err(Error::InvalidArgument(alloc::format!("unknown gender `{s}`"))),
        }
    }
}

/// The 28 impression tags: 14 bipolar pairs, each pair listed as
/// (first pole, second pole).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Impression {
    Good,
    Bad,
    Masculine,
    Feminine,
    Classic,
    Modern,
    Mature,
    Youthful,
    Formal,
    Informal,
    UpperClass,
    Common,
    Urban,
    Natural,
    Wholesome,
    Devious,
    Strong,
    Delicate,
    Refined,
    Rough,
    Strange,
    Boring,
    Simple,
    Complex,
    Serious,
    Comedic,
    Nerdy,
    Unintellectual,
}

impl Impression {
    pub const ALL: [Impression; 28] = [
        Impression::Good,
        Impression::Bad,
        Impression::Masculine,
        Impression::Feminine,
        Impression::Classic,
        Impression::Modern,
        Impression::Mature,
        Impression::Youthful,
        Impression::Formal,
        Impression::Informal,
        Impression::UpperClass,
        Impression::Common,
        Impression::Urban,
        Impression::Natural,
        Impression::Wholesome,
        Impression::Devious,
        Impression::Strong,
        Impression::Delicate,
        Impression::Refined,
        Impression::Rough,
        Impression::Strange,
        Impression::Boring,
        Impression::Simple,
        Impression::Complex,
        Impression::Serious,
        Impression::Comedic,
        Impression::Nerdy,
        Impression::Unintellectual,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Impression::Good => "good",
            Impression::Bad => "bad",
            Impression::Masculine => "masculine",
            Impression::Feminine => "feminine",
            Impression::Classic => "classic",
            Impression::Modern => "modern",
            Impression::Mature => "mature",
            Impression::Youthful => "youthful",
            Impression::Formal => "formal",
            Impression::Informal => "informal",
            Impression::UpperClass => "upper-class",
            Impression::Common => "common",
            Impression::Urban => "urban",
            Impression::Natural => "natural",
            Impression::Wholesome => "wholesome",
            Impression::Devious => "devious",
            Impression::Strong => "strong",
            Impression::Delicate => "delicate",
            Impression::Refined => "refined",
            Impression::Rough => "rough",
            Impression::Strange => "strange",
            Impression::Boring => "boring",
            Impression::Simple => "simple",
            Impression::Complex => "complex",
            Impression::Serious => "serious",
            Impression::Comedic => "comedic",
            Impression::Nerdy => "nerdy",
            Impression::Unintellectual => "unintellectual",
        }
    }

    pub fn bit(self) -> u32 {
        1 << (self as u32)
    }
}

impl FromStr for Impression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Impression::ALL
            .into_iter()
            .find(|i| i.tag() == s || (s == "upperclass" && *i == Impression::UpperClass))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown impression `{s}`")))
    }
}

/// Set of impression tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImpressionSet(u32);

impl ImpressionSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, tag: Impression) {
        self.0 |= tag.bit();
    }

    pub fn contains(&self, tag: Impression) -> bool {
        self.0 & tag.bit() != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Impression> + '_ {
        Impression::ALL.into_iter().filter(|t| self.contains(*t))
    }

    /// One flag per tag, in [`Impression::ALL`] order.
    pub fn flags(&self) -> [bool; 28] {
        let mut out = [false; 28];
        for (i, t) in Impression::ALL.into_iter().enumerate() {
            out[i] = self.contains(t);
        }
        out
    }
}

impl FromIterator<Impression> for ImpressionSet {
    fn from_iter<I: IntoIterator<Item = Impression>>(iter: I) -> Self {
        let mut s = Self::empty();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

fn is_lower_word(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameEntry {
    name: String,
    gender: Gender,
    impressions: ImpressionSet,
}

impl NameEntry {
    pub fn new(name: &str, gender: Gender, impressions: ImpressionSet) -> Result<Self> {
        if !is_lower_word(name) {
            return Err(Error::InvalidArgument(alloc::format!(
                "name `{name}` must match [a-z]+"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            gender,
            impressions,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gender(&self) -> Gender {
        self.gender
    }

    pub fn impressions(&self) -> ImpressionSet {
        self.impressions
    }
}

/// Given names keyed by their lower-case ASCII spelling.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameLexicon {
    entries: BTreeMap<String, NameEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenderCounts {
    pub male: usize,
    pub female: usize,
    pub both: usize,
}

impl NameLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry. A name seen twice is merged: genders combine (male and
    /// female become both) and impression sets are united.
    pub fn insert(&mut self, entry: NameEntry) {
        match self.entries.get_mut(&entry.name) {
            Some(existing) => {
                existing.gender = existing.gender.merge(entry.gender);
                existing.impressions = existing.impressions.union(entry.impressions);
            }
            None => {
                self.entries.insert(entry.name.clone(), entry);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&NameEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &NameEntry> {
        self.entries.values()
    }

    pub fn gender_counts(&self) -> GenderCounts {
        let mut c = GenderCounts::default();
        for e in self.entries.values() {
            match e.gender {
                Gender::Male => c.male += 1,
                Gender::Female => c.female += 1,
                Gender::Both => c.both += 1,
            }
        }
        c
    }

    /// SHA-256 over the canonical `name,gender,tags` rendering, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in self.entries.values() {
            h.update(e.name.as_bytes());
            h.update(b",");
            h.update(e.gender.as_str().as_bytes());
            h.update(b",");
            h.update(e.impressions.0.to_le_bytes());
            h.update(b"\n");
        }
        hex_digest(h)
    }
}

impl FromIterator<NameEntry> for NameLexicon {
    fn from_iter<I: IntoIterator<Item = NameEntry>>(iter: I) -> Self {
        let mut lex = NameLexicon::new();
        for e in iter {
            lex.insert(e);
        }
        lex
    }
}

/// Flat set of lower-case English words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    words: BTreeSet<String>,
}

impl WordList {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for w in words {
            let w = w.into();
            if !is_lower_word(&w) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "word `{w}` must match [a-z]+"
                )));
            }
            set.insert(w);
        }
        if set.is_empty() {
            return Err(Error::Empty("wordlist"));
        }
        Ok(Self { words: set })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        hex_digest(h)
    }
}

pub(crate) fn hex_digest(h: Sha256) -> String {
    use core::fmt::Write;
    let mut s = String::with_capacity(64);
    for b in h.finalize() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

// ASCII folding for U+00C0..=U+017F. Empty entries are separators.
const LATIN1: [&str; 64] = [
    // C0
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i", //
    // D0
    "d", "n", "o", "o", "o", "o", "o", "", "o", "u", "u", "u", "u", "y", "th", "ss", //
    // E0
    "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i", //
    // F0
    "d", "n", "o", "o", "o", "o", "o", "", "o", "u", "u", "u", "u", "y", "th", "y",
];

const LATIN_EXT_A: [&str; 128] = [
    // 0100
    "a", "a", "a", "a", "a", "a", "c", "c", "c", "c", "c", "c", "c", "c", "d", "d", //
    // 0110
    "d", "d", "e", "e", "e", "e", "e", "e", "e", "e", "e", "e", "g", "g", "g", "g", //
    // 0120
    "g", "g", "g", "g", "h", "h", "h", "h", "i", "i", "i", "i", "i", "i", "i", "i", //
    // 0130
    "i", "i", "ij", "ij", "j", "j", "k", "k", "k", "l", "l", "l", "l", "l", "l", "l", //
    // 0140
    "l", "l", "l", "n", "n", "n", "n", "n", "n", "n", "ng", "ng", "o", "o", "o", "o", //
    // 0150
    "o", "o", "oe", "oe", "r", "r", "r", "r", "r", "r", "s", "s", "s", "s", "s", "s", //
    // 0160
    "s", "s", "t", "t", "t", "t", "t", "t", "u", "u", "u", "u", "u", "u", "u", "u", //
    // 0170
    "u", "u", "u", "u", "w", "w", "y", "y", "y", "z", "z", "z", "z", "z", "z", "s",
];

enum Fold {
    Letters(&'static str),
    Ascii(u8),
    Ignore,
    Separator,
}

fn fold(c: char) -> Fold {
    let cp = c as u32;
    match cp {
        0x41..=0x5A => Fold::Ascii(c.to_ascii_lowercase() as u8),
        0x61..=0x7A => Fold::Ascii(c as u8),
        0xC0..=0xFF => match LATIN1[(cp - 0xC0) as usize] {
            "" => Fold::Separator,
            s => Fold::Letters(s),
        },
        0x100..=0x17F => Fold::Letters(LATIN_EXT_A[(cp - 0x100) as usize]),
        // Combining diacritical marks belong to the preceding letter.
        0x300..=0x36F => Fold::Ignore,
        _ => Fold::Separator,
    }
}

/// Folds a name field to lower-case ASCII letter tokens.
///
/// Latin letters with diacritics (Latin-1 Supplement, Latin Extended-A) map to
/// their base letters; every other non-ASCII-letter character separates
/// tokens.
pub fn normalize_name_field(name_field: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for c in name_field.chars() {
        match fold(c) {
            Fold::Ascii(b) => cur.push(b as char),
            Fold::Letters(s) => cur.push_str(s),
            Fold::Ignore => {}
            Fold::Separator => {
                if !cur.is_empty() {
                    tokens.push(core::mem::take(&mut cur));
                }
            }
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Group of already-normalised tokens: name beats word beats custom content.
pub fn group_of_tokens<S: AsRef<str>>(tokens: &[S], lexicon: &NameLexicon, words: &WordList) -> Group {
    if tokens.iter().any(|t| lexicon.contains(t.as_ref())) {
        Group::ContainsName
    } else if tokens.iter().any(|t| words.contains(t.as_ref())) {
        Group::ContainsWords
    } else {
        Group::CustomContent
    }
}

pub fn assign_group(name_field: &str, lexicon: &NameLexicon, words: &WordList) -> Group {
    group_of_tokens(&normalize_name_field(name_field), lexicon, words)
}

/// Share of tokens (with multiplicity) that are English words; 0 for no tokens.
pub fn word_fraction<S: AsRef<str>>(tokens: &[S], words: &WordList) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens.iter().filter(|t| words.contains(t.as_ref())).count();
    hits as f64 / tokens.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NameAttributes {
    pub is_male: bool,
    pub is_female: bool,
    pub impressions: ImpressionSet,
}

/// Union of gender and impression tags over every token found in the lexicon.
pub fn name_attributes<S: AsRef<str>>(tokens: &[S], lexicon: &NameLexicon) -> Result<NameAttributes> {
    let mut found = false;
    let mut attrs = NameAttributes {
        is_male: false,
        is_female: false,
        impressions: ImpressionSet::empty(),
    };
    for entry in tokens.iter().filter_map(|t| lexicon.get(t.as_ref())) {
        found = true;
        attrs.is_male |= entry.gender.is_male();
        attrs.is_female |= entry.gender.is_female();
        attrs.impressions = attrs.impressions.union(entry.impressions);
    }
    if found {
        Ok(attrs)
    } else {
        Err(Error::NoNameMatch)
    }
}
