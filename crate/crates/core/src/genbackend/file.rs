use std::path::{Path, PathBuf};

use super::{ingest_generations, GenError, GenerationBackend, GenerationRecord, GenerationRequest};

/// Serves pre-generated records, matched on prompt and (when the request
/// names one) model id, in file order.
pub struct FileBackend {
    source: Option<PathBuf>,
    records: Vec<GenerationRecord>,
}

impl FileBackend {
    pub fn open(path: &Path) -> Result<Self, GenError> {
        let ingestion = ingest_generations(path)?;
        Ok(FileBackend { source: Some(path.to_owned()), records: ingestion.records })
    }

    pub fn from_records(records: Vec<GenerationRecord>) -> Self {
        FileBackend { source: None, records }
    }

    pub fn records(&self) -> &[GenerationRecord] {
        &self.records
    }

    /// Distinct `(model_id, prompt)` pairs in first-appearance order.
    pub fn keys(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.records {
            if !out.iter().any(|(m, p)| *m == r.model_id && *p == r.prompt) {
                out.push((r.model_id.clone(), r.prompt.clone()));
            }
        }
        out
    }
}

impl GenerationBackend for FileBackend {
    fn backend_id(&self) -> &str {
        "file"
    }

    fn health(&self) -> Result<(), GenError> {
        match &self.source {
            Some(p) if !p.exists() => Err(GenError::FileMissing(p.clone())),
            _ => Ok(()),
        }
    }

    fn generate_records(&self, request: &GenerationRequest) -> Result<Vec<GenerationRecord>, GenError> {
        let matching: Vec<GenerationRecord> = self
            .records
            .iter()
            .filter(|r| r.prompt == request.prompt)
            .filter(|r| request.model_id.is_empty() || r.model_id == request.model_id)
            .take(request.num_samples)
            .cloned()
            .collect();
        if matching.len() < request.num_samples {
            return Err(GenError::Insufficient {
                prompt: request.prompt.clone(),
                model_id: request.model_id.clone(),
                wanted: request.num_samples,
                found: matching.len(),
            });
        }
        Ok(matching)
    }
}
