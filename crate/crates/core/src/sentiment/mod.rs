//! Lexicon-based sentence polarity and sentence splitting.
//!
//! Polarity is the mean, over every lexicon entry found in the sentence, of
//! the entry's signed polarity, multiplied by the factor of an intensifier
//! directly in front of it and by `-0.5` when an odd number of negators
//! occurs among the three tokens before it. The mean is clamped to
//! `[-1, 1]`; a sentence without entries scores exactly `0`.

mod lexicon;
mod split;

use thiserror::Error;

pub use lexicon::{Lexicon, LexiconEntry, LexiconError, BUILTIN_LEXICON};
pub use split::{sentence_spans, split_sentences, split_sentences_for, Sentence};

use crate::text::words;

/// Multiplier applied to an entry under negation.
pub const NEGATION_FLIP: f64 = -0.5;
/// Number of tokens before an entry searched for negators.
pub const NEGATION_WINDOW: usize = 3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SentimentError {
    #[error("mean polarity of an empty set of scores is undefined")]
    EmptyInput,
}

/// One scored lexicon hit, for explaining a score.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub phrase: String,
    pub token_index: usize,
    pub value: f64,
}

pub fn contributions(sentence: &str, lexicon: &Lexicon) -> Vec<Contribution> {
    let tokens = words(sentence);
    let max_len = lexicon.max_phrase_tokens();
    let mut out = Vec::new();
    let mut intensifier: Option<(usize, f64)> = None;
    let mut i = 0;
    while i < tokens.len() {
        let longest = (1..=max_len.min(tokens.len() - i)).rev().find_map(|len| {
            let key = tokens[i..i + len].join(" ");
            lexicon.get(&key).map(|e| (len, key, *e))
        });
        let Some((len, phrase, entry)) = longest else {
            i += 1;
            continue;
        };
        if entry.is_intensifier {
            intensifier = Some((i + len, entry.intensity_factor));
        } else {
            let mut value = entry.polarity;
            if let Some((end, factor)) = intensifier {
                if end == i {
                    value *= factor;
                }
            }
            let negators = tokens[i.saturating_sub(NEGATION_WINDOW)..i]
                .iter()
                .filter(|t| lexicon.is_negator(t))
                .count();
            if negators % 2 == 1 {
                value *= NEGATION_FLIP;
            }
            out.push(Contribution { phrase, token_index: i, value });
        }
        i += len;
    }
    out
}

/// Sentence polarity in `[-1, 1]`.
pub fn polarity(sentence: &str, lexicon: &Lexicon) -> f64 {
    let parts = contributions(sentence, lexicon);
    if parts.is_empty() {
        return 0.0;
    }
    let mean = parts.iter().map(|c| c.value).sum::<f64>() / parts.len() as f64;
    mean.clamp(-1.0, 1.0)
}

pub fn mean_polarity(scores: &[f64]) -> Result<f64, SentimentError> {
    if scores.is_empty() {
        return Err(SentimentError::EmptyInput);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
