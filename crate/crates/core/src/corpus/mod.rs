//! Annotated review corpora and controlled semantic distortion.
//!
//! Reviews carry class-tagged entity spans (the `FOOD` spans are the ones
//! rewritten) and a sentiment label. [`distort`] replaces the food mentions
//! with gazetteer members so that each entity class is tied to a chosen
//! share of positive and negative reviews, while keeping a held-out set of
//! members out of the rewritten text entirely.

mod distort;
mod gazetteer;

use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distort::{
    distort, distort_with, round_half_up_share, validate_no_leakage, AssignmentRecord,
    CellCount, DistortOptions, DistortionManifest, Exclusion, LeakageReport,
};
pub use gazetteer::{split_holdout, Gazetteer, HoldoutSplit};

/// Class label of the spans that distortion rewrites.
pub const FOOD_CLASS: &str = "FOOD";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown review format `{0}` (registered: jsonl)")]
    UnknownFormat(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("gazetteer `{0}` has no members")]
    EmptyGazetteer(String),
    #[error("holdout fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("gazetteer `{class}` needs at least 2 members for a holdout split, has {count}")]
    TooFewMembers { class: String, count: usize },
    #[error("proportion must be an integer in [0, 100], got {0}")]
    BadProportion(u32),
    #[error("class `{0}` has no seen members to draw replacements from")]
    EmptySeenSet(String),
    #[error("review `{id}` is invalid: {reason}")]
    InvalidReview { id: String, reason: String },
    #[error("malformed manifest line {line}: {reason}")]
    BadManifest { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
        })
    }
}

/// A class-tagged half-open byte range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub class: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedReview {
    pub id: String,
    pub text: String,
    pub spans: Vec<EntitySpan>,
    pub sentiment: Sentiment,
}

impl AnnotatedReview {
    /// Checks that spans are non-empty, in bounds, on character boundaries
    /// and pairwise disjoint.
    pub fn validate(&self) -> Result<(), String> {
        let mut spans: Vec<&EntitySpan> = self.spans.iter().collect();
        spans.sort_by_key(|s| (s.start, s.end));
        let mut prev_end = 0;
        for (i, s) in spans.iter().enumerate() {
            if s.start >= s.end {
                return Err(format!("empty span {}..{}", s.start, s.end));
            }
            if s.end > self.text.len() {
                return Err(format!(
                    "span {}..{} exceeds text length {}",
                    s.start,
                    s.end,
                    self.text.len()
                ));
            }
            if !self.text.is_char_boundary(s.start) || !self.text.is_char_boundary(s.end) {
                return Err(format!("span {}..{} splits a character", s.start, s.end));
            }
            if i > 0 && s.start < prev_end {
                return Err(format!("span {}..{} overlaps a previous span", s.start, s.end));
            }
            prev_end = s.end;
        }
        Ok(())
    }

    pub fn food_spans(&self) -> impl Iterator<Item = &EntitySpan> {
        self.spans.iter().filter(|s| s.class == FOOD_CLASS)
    }

    pub fn span_text(&self, span: &EntitySpan) -> &str {
        &self.text[span.start..span.end]
    }
}

/// Why an input record did not become a review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedRecord {
    /// 1-based line number in the source stream.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Ingestion {
    pub reviews: Vec<AnnotatedReview>,
    pub skipped: Vec<SkippedRecord>,
}

impl Ingestion {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

/// Registered review importers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReviewFormat {
    /// One JSON object per line:
    /// `{"id","text","spans":[{"class","start","end"}],"sentiment"}`.
    Jsonl,
}

impl ReviewFormat {
    pub fn from_id(id: &str) -> Result<Self, CorpusError> {
        match id {
            "jsonl" | "opforge-jsonl" => Ok(ReviewFormat::Jsonl),
            other => Err(CorpusError::UnknownFormat(other.to_owned())),
        }
    }
}

#[derive(Deserialize)]
struct RawReview {
    id: String,
    text: String,
    #[serde(default)]
    spans: Vec<EntitySpan>,
    #[serde(default)]
    sentiment: Option<Sentiment>,
}

/// Reads reviews from a line-delimited stream.
///
/// Malformed lines and reviews that violate the span invariants, lack a
/// sentiment label or have no `FOOD` span are skipped and reported; only an
/// unknown format or a read failure aborts.
pub fn ingest_reviews<R: BufRead>(mut source: R, format_id: &str) -> Result<Ingestion, CorpusError> {
    let ReviewFormat::Jsonl = ReviewFormat::from_id(format_id)?;
    let mut out = Ingestion::default();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        if source.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let skip = |reason: String| SkippedRecord { line: line_no, reason };
        let line = match std::str::from_utf8(&buf) {
            Ok(l) => l.trim(),
            Err(e) => {
                out.skipped.push(skip(format!("invalid UTF-8: {e}")));
                continue;
            }
        };
        if line.is_empty() {
            continue;
        }
        let raw: RawReview = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                out.skipped.push(skip(format!("malformed record: {e}")));
                continue;
            }
        };
        let Some(sentiment) = raw.sentiment else {
            out.skipped.push(skip(format!("review `{}` has no sentiment label", raw.id)));
            continue;
        };
        let review = AnnotatedReview {
            id: raw.id,
            text: raw.text,
            spans: raw.spans,
            sentiment,
        };
        if let Err(reason) = review.validate() {
            out.skipped.push(skip(format!("review `{}`: {reason}", review.id)));
            continue;
        }
        if review.food_spans().next().is_none() {
            out.skipped
                .push(skip(format!("review `{}` has no {FOOD_CLASS} span", review.id)));
            continue;
        }
        out.reviews.push(review);
    }
    Ok(out)
}

/// Writes reviews in the `jsonl` format accepted by [`ingest_reviews`].
pub fn write_reviews<W: std::io::Write>(
    mut sink: W,
    reviews: &[AnnotatedReview],
) -> std::io::Result<()> {
    for r in reviews {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}
