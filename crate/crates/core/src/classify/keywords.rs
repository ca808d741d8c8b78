use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::text::words;

/// Source text of the shipped stopword list.
pub const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

impl StopwordList {
    /// One token per line; blank lines and `#` comments ignored.
    pub fn parse(text: &str) -> Self {
        StopwordList {
            words: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Sentence-level document frequencies for the inverse-frequency factor.
///
/// An empty table gives every term the same weight.
#[derive(Debug, Clone, Default)]
pub struct DocumentFrequencies {
    documents: usize,
    df: HashMap<String, usize>,
}

impl DocumentFrequencies {
    pub fn from_sentences<'a, I: IntoIterator<Item = &'a str>>(sentences: I) -> Self {
        let mut out = DocumentFrequencies::default();
        for s in sentences {
            out.add(s);
        }
        out
    }

    pub fn add(&mut self, sentence: &str) {
        self.documents += 1;
        let distinct: HashSet<String> = words(sentence).into_iter().collect();
        for w in distinct {
            *self.df.entry(w).or_insert(0) += 1;
        }
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    /// Smoothed `ln((1 + N) / (1 + df)) + 1`; always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1 + self.documents) as f64 / (1 + df) as f64).ln() + 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub surface: String,
    pub score: f64,
}

fn is_candidate(token: &str, stopwords: &StopwordList) -> bool {
    token.chars().count() >= 2
        && token.chars().any(char::is_alphabetic)
        && !stopwords.contains(token)
}

/// Ranks the content tokens of a sentence by term frequency times inverse
/// sentence frequency, highest first, ties broken alphabetically.
pub fn extract_keywords(
    sentence: &str,
    stopwords: &StopwordList,
    corpus: &DocumentFrequencies,
    max_k: usize,
) -> Vec<Keyword> {
    let mut tf: BTreeMap<String, usize> = BTreeMap::new();
    for w in words(sentence) {
        if is_candidate(&w, stopwords) {
            *tf.entry(w).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<Keyword> = tf
        .into_iter()
        .map(|(surface, n)| Keyword {
            score: n as f64 * corpus.idf(&surface),
            surface,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.surface.cmp(&b.surface))
    });
    ranked.truncate(max_k);
    ranked
}
