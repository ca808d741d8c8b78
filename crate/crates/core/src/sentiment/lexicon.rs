use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

use crate::seeding::sha256_hex;
use crate::text::words;

/// Source text of the shipped lexicon.
pub const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("lexicon entry `{phrase}`: {reason}")]
    Entry { phrase: String, reason: String },
    #[error("i/o error reading lexicon: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexiconEntry {
    pub polarity: f64,
    pub is_intensifier: bool,
    pub intensity_factor: f64,
}

/// Phrase polarities, intensifiers and negators.
///
/// Phrases are stored in canonical form: lowercased word tokens joined by
/// single spaces. Negators are single tokens and never also entries.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, LexiconEntry>,
    negators: HashSet<String>,
    version_id: String,
    max_phrase_tokens: usize,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::parse(BUILTIN_LEXICON).expect("built-in lexicon is valid")
    }
}

fn phrase_key(phrase: &str) -> String {
    words(phrase).join(" ")
}

impl Lexicon {
    pub fn empty(version_id: &str) -> Self {
        Lexicon {
            entries: HashMap::new(),
            negators: HashSet::new(),
            version_id: version_id.to_owned(),
            max_phrase_tokens: 0,
        }
    }

    pub fn version_id(&self) -> &str {
        &self.version_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn max_phrase_tokens(&self) -> usize {
        self.max_phrase_tokens
    }

    pub fn get(&self, phrase: &str) -> Option<&LexiconEntry> {
        self.entries.get(phrase)
    }

    pub fn is_negator(&self, token: &str) -> bool {
        self.negators.contains(token)
    }

    pub fn insert_polar(&mut self, phrase: &str, polarity: f64) -> Result<(), LexiconError> {
        self.insert(phrase, LexiconEntry { polarity, is_intensifier: false, intensity_factor: 1.0 })
    }

    pub fn insert_intensifier(&mut self, phrase: &str, factor: f64) -> Result<(), LexiconError> {
        self.insert(phrase, LexiconEntry { polarity: 0.0, is_intensifier: true, intensity_factor: factor })
    }

    pub fn insert(&mut self, phrase: &str, entry: LexiconEntry) -> Result<(), LexiconError> {
        let key = phrase_key(phrase);
        let fail = |reason: String| LexiconError::Entry { phrase: phrase.to_owned(), reason };
        if key.is_empty() {
            return Err(fail("phrase has no word tokens".into()));
        }
        if !(-1.0..=1.0).contains(&entry.polarity) {
            return Err(fail(format!("polarity {} outside [-1, 1]", entry.polarity)));
        }
        if !(entry.intensity_factor > 0.0 && entry.intensity_factor <= 4.0) {
            return Err(fail(format!("factor {} outside (0, 4]", entry.intensity_factor)));
        }
        if self.negators.contains(&key) {
            return Err(fail("already listed as a negator".into()));
        }
        self.max_phrase_tokens = self.max_phrase_tokens.max(key.split(' ').count());
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn insert_negator(&mut self, token: &str) -> Result<(), LexiconError> {
        let key = phrase_key(token);
        let fail = |reason: &str| LexiconError::Entry { phrase: token.to_owned(), reason: reason.into() };
        if key.is_empty() || key.contains(' ') {
            return Err(fail("negators must be a single word"));
        }
        if self.entries.contains_key(&key) {
            return Err(fail("already listed as an entry"));
        }
        self.negators.insert(key);
        Ok(())
    }

    /// Parses `phrase<TAB>polarity<TAB>kind<TAB>factor` lines, where kind is
    /// `polar`, `intensifier` or `negator`. Lines starting with `#` are
    /// comments, except a `#version<TAB>id` line naming the lexicon version.
    /// Without it the version is derived from the content hash.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut version = None;
        let mut lex = Lexicon::empty("");
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if let Some(rest) = line.strip_prefix("#version\t") {
                version = Some(rest.trim().to_owned());
                continue;
            }
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let bad = |reason: String| LexiconError::Line { line: line_no, reason };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(bad(format!("expected 4 tab-separated columns, found {}", cols.len())));
            }
            let polarity: f64 = cols[1]
                .trim()
                .parse()
                .map_err(|_| bad(format!("polarity `{}` is not a number", cols[1])))?;
            let factor: f64 = cols[3]
                .trim()
                .parse()
                .map_err(|_| bad(format!("factor `{}` is not a number", cols[3])))?;
            let result = match cols[2].trim() {
                "polar" => lex.insert(
                    cols[0],
                    LexiconEntry { polarity, is_intensifier: false, intensity_factor: factor },
                ),
                "intensifier" => lex.insert(
                    cols[0],
                    LexiconEntry { polarity, is_intensifier: true, intensity_factor: factor },
                ),
                "negator" => lex.insert_negator(cols[0]),
                other => return Err(bad(format!("unknown kind `{other}`"))),
            };
            result.map_err(|e| match e {
                LexiconError::Entry { reason, .. } => bad(reason),
                other => other,
            })?;
        }
        lex.version_id = version.unwrap_or_else(|| format!("sha256:{}", &sha256_hex(text.as_bytes())[..16]));
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
