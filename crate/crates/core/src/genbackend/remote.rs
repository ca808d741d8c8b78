use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{GenError, GenerationBackend, GenerationRecord, GenerationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Service root, e.g. `http://127.0.0.1:8080`.
    pub base_url: String,
    pub corpus_id: String,
    pub timeout_ms: u64,
    /// Attempts after the first one, for transport errors and 5xx replies.
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl RemoteConfig {
    pub fn new(base_url: &str, corpus_id: &str) -> Self {
        RemoteConfig {
            base_url: base_url.trim_end_matches('/').to_owned(),
            corpus_id: corpus_id.to_owned(),
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_ms: 200,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    num_samples: usize,
    max_new_tokens: usize,
    temperature: f64,
    seed: u64,
    model_id: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    samples: Vec<String>,
    model_id: String,
}

#[derive(Deserialize)]
struct WireErrorBody {
    error: WireError,
}

#[derive(Deserialize)]
struct WireError {
    code: String,
    message: String,
}

#[derive(Deserialize)]
struct WireHealth {
    status: String,
    #[allow(dead_code)]
    model_id: String,
}

/// Client for the generation service (`POST /v1/generate`, `GET /v1/health`).
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { config, agent }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// GET without a body, POST with one.
    fn once(&self, path: &str, body: Option<&str>) -> Result<(u16, String), String> {
        let url = format!("{}{}", self.config.base_url, path);
        let result = match body {
            Some(b) => self.agent.post(&url).header("content-type", "application/json").send(b),
            None => self.agent.get(&url).call(),
        };
        let mut response = result.map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }

    /// Runs one call with bounded retries; returns the 2xx body.
    fn call(&self, path: &str, body: Option<&str>) -> Result<String, GenError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let err = match self.once(path, body) {
                Ok((status, text)) if (200..300).contains(&status) => return Ok(text),
                Ok((status, text)) => {
                    let (code, message) = match serde_json::from_str::<WireErrorBody>(&text) {
                        Ok(b) => (b.error.code, b.error.message),
                        Err(_) => ("unknown".to_owned(), text),
                    };
                    GenError::Service { status, code, message }
                }
                Err(message) => GenError::Transport { attempts, message },
            };
            if !err.is_retryable() || attempts > self.config.max_retries {
                return Err(err);
            }
            std::thread::sleep(Duration::from_millis(self.config.backoff_ms * u64::from(attempts)));
        }
    }
}

impl GenerationBackend for RemoteBackend {
    fn backend_id(&self) -> &str {
        "remote"
    }

    fn health(&self) -> Result<(), GenError> {
        let body = self.call("/v1/health", None)?;
        let health: WireHealth =
            serde_json::from_str(&body).map_err(|e| GenError::Protocol(format!("health response: {e}")))?;
        if health.status != "ok" {
            return Err(GenError::Protocol(format!("health status `{}`", health.status)));
        }
        Ok(())
    }

    fn generate_records(&self, request: &GenerationRequest) -> Result<Vec<GenerationRecord>, GenError> {
        let wire = WireRequest {
            prompt: &request.prompt,
            num_samples: request.num_samples,
            max_new_tokens: request.max_new_tokens,
            temperature: request.temperature,
            seed: request.seed,
            model_id: &request.model_id,
        };
        let body = serde_json::to_string(&wire).map_err(|e| GenError::Protocol(e.to_string()))?;
        let text = self.call("/v1/generate", Some(&body))?;
        let response: WireResponse =
            serde_json::from_str(&text).map_err(|e| GenError::Protocol(format!("generate response: {e}")))?;
        if response.samples.len() != request.num_samples {
            return Err(GenError::WrongCount { expected: request.num_samples, got: response.samples.len() });
        }
        Ok(response
            .samples
            .into_iter()
            .enumerate()
            .map(|(i, text)| GenerationRecord {
                model_id: response.model_id.clone(),
                corpus_id: self.config.corpus_id.clone(),
                prompt: request.prompt.clone(),
                sample_index: i,
                text,
                seed: request.seed,
                backend_id: Some("remote".to_owned()),
                timestamp: None,
            })
            .collect())
    }
}
