use opforge_core::genbackend::{
    generate, ingest_generations, ClassBank, FileBackend, GenerationBackend, GenerationRecord, GenerationRequest,
    RemoteBackend, RemoteConfig, SyntheticBackend, SyntheticBiasConfig,
};

use crate::config::{BackendSpec, RemoteSpec, SyntheticSpec};
use crate::error::{CliError, CliResult};
use crate::resources::Resources;

/// Every record of the configured generation files, in file order.
pub fn file_records(spec: &BackendSpec, resources: &mut Resources) -> CliResult<Vec<GenerationRecord>> {
    let BackendSpec::File(f) = spec else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for path in &f.paths {
        let ing = ingest_generations(path)?;
        resources.hash_input(path)?;
        out.extend(ing.records);
    }
    Ok(out)
}

pub fn remote(spec: &RemoteSpec, corpus_id: &str) -> RemoteBackend {
    let mut cfg = RemoteConfig::new(&spec.url, corpus_id);
    cfg.timeout_ms = spec.timeout_ms;
    cfg.max_retries = spec.max_retries;
    cfg.backoff_ms = spec.backoff_ms;
    RemoteBackend::new(cfg)
}

/// The class-bias generator at polarisation `p`; `None` gives the generic
/// baseline, which mentions either class at a small flat rate.
pub fn synthetic(
    spec: &SyntheticSpec,
    resources: &Resources,
    model_id: &str,
    corpus_id: &str,
    p: Option<u32>,
) -> CliResult<SyntheticBackend> {
    let company = ClassBank::from_split(&resources.company_split);
    let city = ClassBank::from_split(&resources.city_split);
    let mut cfg = SyntheticBiasConfig::new(model_id, corpus_id, company, city);
    match p {
        Some(p) => cfg = cfg.with_polarisation(p as f64).with_rates(spec.base_rate, spec.slope),
        None => cfg = cfg.with_rates(spec.generic_base_rate, 0.0),
    }
    cfg.template_fidelity = spec.template_fidelity;
    cfg.noise_rate = spec.noise_rate;
    cfg.unseen_rate = spec.unseen_rate;
    Ok(SyntheticBackend::new(cfg, resources.lexicon.clone())?)
}

/// `K` records for each prompt, in prompt order.
pub fn generate_prompts(
    backend: &dyn GenerationBackend,
    prompts: &[String],
    k: usize,
    seed: u64,
    model_id: &str,
) -> CliResult<Vec<GenerationRecord>> {
    let mut out = Vec::with_capacity(prompts.len() * k);
    for prompt in prompts {
        let req = GenerationRequest::new(prompt, k).with_seed(seed).with_model(model_id);
        out.extend(generate(backend, &req).map_err(CliError::from)?);
    }
    Ok(out)
}

pub fn file_backend(records: &[GenerationRecord]) -> FileBackend {
    FileBackend::from_records(records.to_vec())
}
