//! Generation sources: a synthetic class-bias generator, a topic-opinion
//! generator, pre-generated record files, and a remote HTTP service.
//!
//! Every backend returns exactly `num_samples` records per request, with
//! `sample_index` running `0..K` and the continuation text only.

mod file;
mod remote;
mod synthetic;
mod topic;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sentiment::{polarity, Lexicon};

pub use file::FileBackend;
pub use remote::{RemoteBackend, RemoteConfig};
pub use synthetic::{ClassBank, SyntheticBackend, SyntheticBiasConfig, DEFAULT_GENERALIZATION_RATE};
pub use topic::{TopicBackend, TopicOpinionConfig};

pub const DEFAULT_SAMPLE_CAP: usize = 10_000;
/// Prompts scoring strictly inside `(-0.05, 0.05)` are neutral.
pub const PROMPT_NEUTRAL_BAND: f64 = 0.05;
/// Share of malformed lines above which ingestion fails outright.
pub const MAX_MALFORMED_SHARE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("requested {requested} samples, cap is {cap}")]
    OverCap { requested: usize, cap: usize },
    #[error("invalid backend configuration: {0}")]
    BadConfig(String),
    #[error("generation file not found: {}", .0.display())]
    FileMissing(PathBuf),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("only {found} records for prompt `{prompt}` (model `{model_id}`), {wanted} requested")]
    Insufficient { prompt: String, model_id: String, wanted: usize, found: usize },
    #[error("{malformed} of {total} lines malformed (first at line {first_line}: {first_reason})")]
    TooManyMalformed { malformed: usize, total: usize, first_line: usize, first_reason: String },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("service error {status} ({code}): {message}")]
    Service { status: u16, code: String, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend returned {got} records, expected {expected}")]
    WrongCount { expected: usize, got: usize },
}

impl GenError {
    pub fn is_retryable(&self) -> bool {
        match self {
            GenError::Transport { .. } => true,
            GenError::Service { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub num_samples: usize,
    pub max_new_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
    pub model_id: String,
}

impl GenerationRequest {
    pub fn new(prompt: &str, num_samples: usize) -> Self {
        GenerationRequest {
            prompt: prompt.to_owned(),
            num_samples,
            max_new_tokens: 40,
            temperature: 1.0,
            seed: 0,
            model_id: String::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_model(mut self, model_id: &str) -> Self {
        self.model_id = model_id.to_owned();
        self
    }

    pub fn validate(&self, cap: usize) -> Result<(), GenError> {
        if self.prompt.trim().is_empty() {
            return Err(GenError::InvalidRequest("prompt is empty".into()));
        }
        if self.num_samples == 0 {
            return Err(GenError::InvalidRequest("num_samples must be at least 1".into()));
        }
        if self.num_samples > cap {
            return Err(GenError::OverCap { requested: self.num_samples, cap });
        }
        if self.max_new_tokens == 0 {
            return Err(GenError::InvalidRequest("max_new_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(GenError::InvalidRequest(format!("temperature {} must be >= 0", self.temperature)));
        }
        Ok(())
    }
}

/// One generated continuation. The on-disk form is one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub model_id: String,
    pub corpus_id: String,
    pub prompt: String,
    pub sample_index: usize,
    pub text: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

pub trait GenerationBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn health(&self) -> Result<(), GenError>;

    /// Produces the records for an already validated request.
    fn generate_records(&self, request: &GenerationRequest) -> Result<Vec<GenerationRecord>, GenError>;
}

pub fn generate(
    backend: &dyn GenerationBackend,
    request: &GenerationRequest,
) -> Result<Vec<GenerationRecord>, GenError> {
    generate_capped(backend, request, DEFAULT_SAMPLE_CAP)
}

pub fn generate_capped(
    backend: &dyn GenerationBackend,
    request: &GenerationRequest,
    cap: usize,
) -> Result<Vec<GenerationRecord>, GenError> {
    request.validate(cap)?;
    backend.health()?;
    let records = backend.generate_records(request)?;
    if records.len() != request.num_samples {
        return Err(GenError::WrongCount { expected: request.num_samples, got: records.len() });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptSign {
    Positive,
    Negative,
    Neutral,
}

pub fn classify_prompt_sign(prompt: &str, lexicon: &Lexicon) -> PromptSign {
    let score = polarity(prompt, lexicon);
    if score.abs() < PROMPT_NEUTRAL_BAND {
        PromptSign::Neutral
    } else if score > 0.0 {
        PromptSign::Positive
    } else {
        PromptSign::Negative
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct GenerationIngestion {
    pub records: Vec<GenerationRecord>,
    pub malformed: Vec<MalformedLine>,
}

fn check_record(r: &GenerationRecord) -> Result<(), String> {
    if r.model_id.trim().is_empty() {
        return Err("model_id is empty".into());
    }
    if r.prompt.trim().is_empty() {
        return Err("prompt is empty".into());
    }
    Ok(())
}

/// Reads generation records, tolerating up to 1% malformed non-blank lines.
pub fn read_generations<R: BufRead>(source: R) -> Result<GenerationIngestion, GenError> {
    let mut out = GenerationIngestion::default();
    let mut total = 0usize;
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let parsed = serde_json::from_str::<GenerationRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| check_record(&r).map(|_| r));
        match parsed {
            Ok(r) => out.records.push(r),
            Err(reason) => out.malformed.push(MalformedLine { line: i + 1, reason }),
        }
    }
    if out.malformed.len() as f64 > MAX_MALFORMED_SHARE * total as f64 {
        let first = &out.malformed[0];
        return Err(GenError::TooManyMalformed {
            malformed: out.malformed.len(),
            total,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    Ok(out)
}

pub fn ingest_generations(path: &Path) -> Result<GenerationIngestion, GenError> {
    if !path.exists() {
        return Err(GenError::FileMissing(path.to_owned()));
    }
    read_generations(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_generations<W: Write>(mut sink: W, records: &[GenerationRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}
