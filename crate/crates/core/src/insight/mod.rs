//! Opinion dataset construction and templated insight mining.
//!
//! A dataset row is one (sentence, keyword) pair from a generation, carrying
//! the sentence polarity and the model family and corpus that produced it.
//! Rows whose corpus is the generic id come from a model without
//! fine-tuning; all others are fine-tuned.

mod candidates;
mod mine;
mod render;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use candidates::{enumerate_candidates, Candidate};
pub use mine::{mine, score_candidate, verify, DroppedCandidate, MiningConfig, MiningOutcome};
pub use render::{percent_difference, render_insight, sentiment_band};

use crate::classify::{extract_keywords, DocumentFrequencies, StopwordList};
use crate::genbackend::GenerationRecord;
use crate::sentiment::{polarity, split_sentences_for, Lexicon};
use crate::stats::TestResult;

pub const DEFAULT_GENERIC_ID: &str = "generic";

#[derive(Debug, Error)]
pub enum InsightError {
    #[error("percentage difference undefined for a zero base value")]
    ZeroBase,
    #[error("invalid mining configuration: {0}")]
    BadConfig(String),
    #[error("dataset line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionRow {
    pub model_family: String,
    pub corpus_id: String,
    pub prompt: String,
    pub sample_index: usize,
    pub sentence_index: usize,
    pub sentence: String,
    pub keyword: String,
    pub polarity: f64,
}

#[derive(Debug, Clone)]
pub struct KeywordConfig {
    pub stopwords: StopwordList,
    pub max_k: usize,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        KeywordConfig { stopwords: StopwordList::default(), max_k: 3 }
    }
}

/// One row per (sentence, extracted keyword). Inverse sentence frequencies
/// are taken over every sentence of `records`.
pub fn build_opinion_dataset(records: &[GenerationRecord], lexicon: &Lexicon, keywords: &KeywordConfig) -> Vec<OpinionRow> {
    let sentences: Vec<_> = records
        .par_iter()
        .map(|r| split_sentences_for(&format!("{}#{}", r.prompt, r.sample_index), &r.text))
        .collect();
    let df = DocumentFrequencies::from_sentences(sentences.iter().flatten().map(|s| s.text.as_str()));
    records
        .par_iter()
        .zip(sentences.par_iter())
        .map(|(r, ss)| {
            let mut rows = Vec::new();
            for s in ss {
                let kws = extract_keywords(&s.text, &keywords.stopwords, &df, keywords.max_k);
                if kws.is_empty() {
                    continue;
                }
                let p = polarity(&s.text, lexicon);
                rows.extend(kws.into_iter().map(|k| OpinionRow {
                    model_family: r.model_id.clone(),
                    corpus_id: r.corpus_id.clone(),
                    prompt: r.prompt.clone(),
                    sample_index: r.sample_index,
                    sentence_index: s.index_in_parent,
                    sentence: s.text.clone(),
                    keyword: k.surface,
                    polarity: p,
                }));
            }
            rows
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn write_dataset<W: Write>(mut sink: W, rows: &[OpinionRow]) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead>(source: R) -> Result<Vec<OpinionRow>, InsightError> {
    let mut rows = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: OpinionRow = serde_json::from_str(&line)
            .map_err(|e| InsightError::Malformed { line: i + 1, reason: e.to_string() })?;
        if row.keyword.is_empty() || !(-1.0..=1.0).contains(&row.polarity) {
            return Err(InsightError::Malformed { line: i + 1, reason: "empty keyword or polarity out of range".into() });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Rows plus the corpus id that marks generations without fine-tuning.
#[derive(Debug, Clone)]
pub struct OpinionDataset {
    rows: Vec<OpinionRow>,
    generic_id: String,
    by_keyword: BTreeMap<String, Vec<usize>>,
    families: usize,
}

impl OpinionDataset {
    pub fn new(rows: Vec<OpinionRow>, generic_id: &str) -> Self {
        let mut by_keyword: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in rows.iter().enumerate() {
            by_keyword.entry(r.keyword.clone()).or_default().push(i);
        }
        let families = rows.iter().map(|r| r.model_family.as_str()).collect::<std::collections::BTreeSet<_>>().len();
        OpinionDataset { rows, generic_id: generic_id.to_owned(), by_keyword, families }
    }

    pub fn rows(&self) -> &[OpinionRow] {
        &self.rows
    }

    pub fn generic_id(&self) -> &str {
        &self.generic_id
    }

    pub fn family_count(&self) -> usize {
        self.families
    }

    pub fn is_fine_tuned(&self, row: &OpinionRow) -> bool {
        row.corpus_id != self.generic_id
    }

    /// Rows matching `filter`, in dataset order.
    pub fn select(&self, filter: &SubsetFilter) -> Vec<&OpinionRow> {
        let keep = |r: &&OpinionRow| filter.matches(r, &self.generic_id);
        match &filter.keyword {
            Some(k) => self
                .by_keyword
                .get(k)
                .map(|idx| idx.iter().map(|&i| &self.rows[i]).filter(keep).collect())
                .unwrap_or_default(),
            None => self.rows.iter().filter(keep).collect(),
        }
    }
}

/// A subset of the dataset fixed on some of its dimensions.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubsetFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_tuned: Option<bool>,
    pub row_count: usize,
}

impl SubsetFilter {
    pub fn matches(&self, row: &OpinionRow, generic_id: &str) -> bool {
        self.model_family.as_ref().is_none_or(|f| *f == row.model_family)
            && self.corpus_id.as_ref().is_none_or(|c| *c == row.corpus_id)
            && self.keyword.as_ref().is_none_or(|k| *k == row.keyword)
            && self.fine_tuned.is_none_or(|ft| ft == (row.corpus_id != generic_id))
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(f) = &self.model_family {
            parts.push(format!("model_family={f}"));
        }
        if let Some(c) = &self.corpus_id {
            parts.push(format!("corpus_id={c}"));
        }
        if let Some(k) = &self.keyword {
            parts.push(format!("keyword={k}"));
        }
        if let Some(ft) = self.fine_tuned {
            parts.push(format!("fine_tuned={ft}"));
        }
        parts.join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Count,
    MeanPolarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    Ks,
    /// Too few count buckets for KS; pooled two-proportion z-test instead.
    ZFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub insight_type: u8,
    pub left_filter: SubsetFilter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_filter: Option<SubsetFilter>,
    pub metric: Metric,
    pub left_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub percent_diff: Option<f64>,
    pub significance: TestResult,
    pub method: ScoreMethod,
    pub truthful: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordMean {
    pub rows: usize,
    pub mean_polarity: f64,
}

/// Per `(model_family, corpus_id)`, each keyword's row count and mean polarity.
pub fn keyword_means(rows: &[OpinionRow]) -> BTreeMap<(String, String), BTreeMap<String, KeywordMean>> {
    let mut acc: BTreeMap<(String, String), BTreeMap<String, (usize, f64)>> = BTreeMap::new();
    for r in rows {
        let e = acc
            .entry((r.model_family.clone(), r.corpus_id.clone()))
            .or_default()
            .entry(r.keyword.clone())
            .or_insert((0, 0.0));
        e.0 += 1;
        e.1 += r.polarity;
    }
    acc.into_iter()
        .map(|(k, m)| {
            let m = m
                .into_iter()
                .map(|(kw, (n, sum))| (kw, KeywordMean { rows: n, mean_polarity: sum / n as f64 }))
                .collect();
            (k, m)
        })
        .collect()
}
