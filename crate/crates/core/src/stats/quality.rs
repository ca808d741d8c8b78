use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::genbackend::GenerationRecord;
use crate::sentiment::{polarity, Lexicon};
use crate::text::words;

const NGRAM: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub generations: usize,
    pub unique_tokens_after_prompt: usize,
    pub copied_first_5grams: usize,
    /// Continuations with fewer than five tokens, never counted as copies.
    pub short_generations: usize,
    pub sentiment_stddev: f64,
}

/// Every contiguous 5-token window of a training corpus, one document at a time.
#[derive(Debug, Clone, Default)]
pub struct TrainingNgrams {
    grams: HashSet<Vec<String>>,
}

impl TrainingNgrams {
    pub fn new<'a, I: IntoIterator<Item = &'a str>>(documents: I) -> Self {
        let mut grams = HashSet::new();
        for doc in documents {
            for w in words(doc).windows(NGRAM) {
                grams.insert(w.to_vec());
            }
        }
        TrainingNgrams { grams }
    }

    pub fn contains(&self, gram: &[String]) -> bool {
        self.grams.contains(gram)
    }
}

fn continuation<'a>(text: &'a str, prompt: &str) -> &'a str {
    let t = text.trim_start();
    match t.strip_prefix(prompt.trim()) {
        Some(rest) if !prompt.trim().is_empty() => rest,
        _ => t,
    }
}

/// Generation-quality indicators used to pick a fine-tuning checkpoint:
/// vocabulary after the prompt, verbatim copying of training text, and the
/// spread of sentiment.
pub fn quality_metrics(
    records: &[GenerationRecord],
    prompt: &str,
    training: &TrainingNgrams,
    lexicon: &Lexicon,
) -> Result<QualityMetrics, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut vocabulary = HashSet::new();
    let mut copied = 0;
    let mut short = 0;
    let mut scores = Vec::with_capacity(records.len());
    for r in records {
        let text = continuation(&r.text, prompt);
        let tokens = words(text);
        if tokens.len() < NGRAM {
            short += 1;
        } else if training.contains(&tokens[..NGRAM]) {
            copied += 1;
        }
        vocabulary.extend(tokens);
        scores.push(polarity(text, lexicon));
    }
    // shifted by the first score so constant outputs give exactly zero
    let n = scores.len() as f64;
    let shift = scores[0];
    let mean = scores.iter().map(|s| s - shift).sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - shift - mean).powi(2)).sum::<f64>() / n;
    Ok(QualityMetrics {
        generations: records.len(),
        unique_tokens_after_prompt: vocabulary.len(),
        copied_first_5grams: copied,
        short_generations: short,
        sentiment_stddev: var.sqrt(),
    })
}
