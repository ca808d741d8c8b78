use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use opforge_core::genbackend::DEFAULT_SAMPLE_CAP;
use opforge_core::insight::{MiningConfig, DEFAULT_GENERIC_ID};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, OrFail};

/// Polar prompts of the entity-class experiment.
pub const POLAR_PROMPTS: [&str; 6] =
    ["I like very much", "it is really bad", "we just love", "that makes me sick", "it is so delicious", "awful stuff"];

/// Belief prompts of the opinion dataset.
pub const BELIEF_PROMPTS: [&str; 4] = ["I believe in", "I do not believe in", "I trust in", "I do not trust in"];

pub const DEMO_TOPICS: [&str; 10] = ["evil", "hope", "children", "art", "work", "world", "earth", "say", "ask", "fear"];

/// Members held out from training by default when the shipped gazetteers are used.
pub const DEFAULT_UNSEEN_CITY: [&str; 6] = ["Brooklyn", "Fort Madison", "Johnstown", "New Braunfels", "Parkville", "Pearl City"];
pub const DEFAULT_UNSEEN_COMPANY: [&str; 6] =
    ["Air France-KLM", "American Electric", "Korea Gas", "Motorola Solutions", "Nike", "PG&E"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Synthetic,
    File,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub base_rate: f64,
    pub slope: f64,
    pub template_fidelity: f64,
    pub noise_rate: f64,
    /// Chance of mentioning a held-out member; `null` keeps to seen members.
    pub unseen_rate: Option<f64>,
    /// Per-class mention rate of the generic baseline, which has no slope.
    pub generic_base_rate: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            base_rate: 0.1,
            slope: 0.7,
            template_fidelity: 0.8,
            noise_rate: 0.3,
            unseen_rate: Some(0.5),
            generic_base_rate: 0.005,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileSpec {
    pub paths: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSpec {
    pub url: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RemoteSpec {
    fn default() -> Self {
        RemoteSpec { url: String::new(), timeout_ms: 120_000, max_retries: 3, backoff_ms: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Synthetic(SyntheticSpec),
    File(FileSpec),
    Remote(RemoteSpec),
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Synthetic(SyntheticSpec::default())
    }
}

impl BackendSpec {
    pub fn kind(&self) -> BackendKind {
        match self {
            BackendSpec::Synthetic(_) => BackendKind::Synthetic,
            BackendSpec::File(_) => BackendKind::File,
            BackendSpec::Remote(_) => BackendKind::Remote,
        }
    }

    /// Switches backend kind, keeping the current settings if it already matches.
    pub fn switch_to(&mut self, kind: BackendKind) {
        if self.kind() == kind {
            return;
        }
        *self = match kind {
            BackendKind::Synthetic => BackendSpec::Synthetic(SyntheticSpec::default()),
            BackendKind::File => BackendSpec::File(FileSpec::default()),
            BackendKind::Remote => BackendSpec::Remote(RemoteSpec::default()),
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnseenLists {
    pub city: Vec<String>,
    pub company: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GazetteerSources {
    /// `null` uses the shipped list.
    pub city: Option<PathBuf>,
    pub company: Option<PathBuf>,
    pub holdout_fraction: f64,
    /// Explicit held-out members. Without it the shipped lists hold out
    /// their default members and custom lists a seeded random fraction.
    pub unseen: Option<UnseenLists>,
}

impl Default for GazetteerSources {
    fn default() -> Self {
        GazetteerSources { city: None, company: None, holdout_fraction: 0.2, unseen: None }
    }
}

/// One (model family, corpus) generator of the opinion dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSource {
    pub model_family: String,
    pub corpus_id: String,
    #[serde(default = "default_topics")]
    pub topics: Vec<String>,
    #[serde(default)]
    pub bias: BTreeMap<String, f64>,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    /// Model id sent to a remote backend; defaults to `{family}-{corpus}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_model: Option<String>,
}

fn default_topics() -> Vec<String> {
    DEMO_TOPICS.iter().map(|s| s.to_string()).collect()
}

impl DemoSource {
    pub fn new(model_family: &str, corpus_id: &str) -> Self {
        DemoSource {
            model_family: model_family.to_owned(),
            corpus_id: corpus_id.to_owned(),
            topics: default_topics(),
            bias: BTreeMap::new(),
            weights: BTreeMap::new(),
            remote_model: None,
        }
    }

    fn bias(mut self, topic: &str, b: f64) -> Self {
        self.bias.insert(topic.to_owned(), b);
        self
    }

    fn weight(mut self, topic: &str, w: f64) -> Self {
        self.weights.insert(topic.to_owned(), w);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub generic_id: String,
    pub prompts: Vec<String>,
    pub sources: Vec<DemoSource>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            generic_id: DEFAULT_GENERIC_ID.to_owned(),
            prompts: BELIEF_PROMPTS.iter().map(|s| s.to_string()).collect(),
            sources: vec![
                DemoSource::new("gpt2", DEFAULT_GENERIC_ID),
                DemoSource::new("gpt2", "bible").bias("evil", -0.35).bias("children", 0.3).weight("say", 2.0),
                DemoSource::new("gpt2", "ep").bias("earth", 0.4),
                DemoSource::new("opt", DEFAULT_GENERIC_ID),
                DemoSource::new("opt", "bible").bias("evil", -0.3).weight("say", 3.0),
                DemoSource::new("opt", "plato").bias("art", 0.35).bias("world", -0.3),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory; left out of the run snapshot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: String,
    pub k: usize,
    pub proportions: Vec<u32>,
    /// `null` means `max(10, ⌈K/100⌉)`.
    pub theta: Option<i64>,
    pub prompts: Vec<String>,
    pub gazetteers: GazetteerSources,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    /// Annotated reviews to distort at each proportion.
    pub reviews: Option<PathBuf>,
    pub backend: BackendSpec,
    pub demo: DemoConfig,
    pub mining: MiningConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let labels = [("gpt2", "GPT2"), ("opt", "OPT"), ("bible", "Bible"), ("ep", "EP"), ("plato", "Plato")];
        ExperimentConfig {
            seed: 42,
            out: None,
            model: "gpt2".into(),
            k: 1000,
            proportions: vec![0, 25, 50, 75, 100],
            theta: None,
            prompts: POLAR_PROMPTS.iter().map(|s| s.to_string()).collect(),
            gazetteers: GazetteerSources::default(),
            lexicon: None,
            stopwords: None,
            reviews: None,
            backend: BackendSpec::default(),
            demo: DemoConfig::default(),
            mining: MiningConfig {
                labels: labels.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
                ..MiningConfig::default()
            },
        }
    }
}

/// Command-line values, applied over the file and the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub proportions: Option<Vec<u32>>,
    pub k: Option<usize>,
    pub theta: Option<i64>,
    pub alpha: Option<f64>,
}

pub fn parse_proportions(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<u32>().map_err(|e| format!("bad proportion `{}`: {e}", t.trim())))
        .collect()
}

fn parse_env<T: std::str::FromStr>(name: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| CliError::usage(format!("{name}={value}: {e}")))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        cfg.resolve_relative(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes input paths relative to the config file's directory.
    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.gazetteers.city,
            &mut self.gazetteers.company,
            &mut self.lexicon,
            &mut self.stopwords,
            &mut self.reviews,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        if let BackendSpec::File(f) = &mut self.backend {
            f.paths.iter_mut().for_each(fix);
        }
    }

    /// `OPFORGE_*` variables; `lookup` is `std::env::var` outside tests.
    pub fn apply_env<F: Fn(&str) -> Option<String>>(&mut self, lookup: F) -> CliResult<()> {
        if let Some(v) = lookup("OPFORGE_SEED") {
            self.seed = parse_env("OPFORGE_SEED", &v)?;
        }
        if let Some(v) = lookup("OPFORGE_OUT") {
            self.out = Some(PathBuf::from(v));
        }
        if let Some(v) = lookup("OPFORGE_MODEL") {
            self.model = v;
        }
        if let Some(v) = lookup("OPFORGE_K") {
            self.k = parse_env("OPFORGE_K", &v)?;
        }
        if let Some(v) = lookup("OPFORGE_PROPORTIONS") {
            self.proportions = parse_proportions(&v).map_err(CliError::usage)?;
        }
        if let Some(v) = lookup("OPFORGE_THETA") {
            self.theta = Some(parse_env("OPFORGE_THETA", &v)?);
        }
        if let Some(v) = lookup("OPFORGE_ALPHA") {
            self.mining.alpha = parse_env("OPFORGE_ALPHA", &v)?;
        }
        if let Some(v) = lookup("OPFORGE_BACKEND") {
            let kind = <BackendKind as clap::ValueEnum>::from_str(v.trim(), true)
                .map_err(|e| CliError::usage(format!("OPFORGE_BACKEND={v}: {e}")))?;
            self.backend.switch_to(kind);
        }
        if let Some(v) = lookup("OPFORGE_REMOTE_URL") {
            self.backend.switch_to(BackendKind::Remote);
            if let BackendSpec::Remote(r) = &mut self.backend {
                r.url = v;
            }
        }
        if let Some(v) = lookup("OPFORGE_FILES") {
            self.backend.switch_to(BackendKind::File);
            if let BackendSpec::File(f) = &mut self.backend {
                f.paths = v.split(',').filter(|s| !s.is_empty()).map(PathBuf::from).collect();
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(kind) = o.backend {
            self.backend.switch_to(kind);
        }
        if let Some(p) = &o.proportions {
            self.proportions = p.clone();
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(t) = o.theta {
            self.theta = Some(t);
        }
        if let Some(a) = o.alpha {
            self.mining.alpha = a;
        }
    }

    /// Defaults, then `path`, then the environment, then `overrides`.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("opforge-out"))
    }

    pub fn theta(&self) -> i64 {
        self.theta.unwrap_or_else(|| opforge_core::stats::default_theta(self.k) as i64)
    }

    /// The configuration as recorded in a run directory.
    pub fn snapshot(&self) -> ExperimentConfig {
        ExperimentConfig { out: None, ..self.clone() }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::usage(m));
        if self.k == 0 || self.k > DEFAULT_SAMPLE_CAP {
            return bad(format!("k must be in 1..={DEFAULT_SAMPLE_CAP}, got {}", self.k));
        }
        if self.proportions.is_empty() {
            return bad("proportion list is empty".into());
        }
        if let Some(p) = self.proportions.iter().find(|&&p| p > 100) {
            return bad(format!("proportion {p} outside [0, 100]"));
        }
        if self.model.trim().is_empty() {
            return bad("model id is empty".into());
        }
        if self.prompts.is_empty() || self.demo.prompts.is_empty() {
            return bad("prompt lists must be non-empty".into());
        }
        if let Some(t) = self.theta {
            if t < 0 {
                return bad(format!("theta must be non-negative, got {t}"));
            }
        }
        let g = &self.gazetteers;
        if !(g.holdout_fraction > 0.0 && g.holdout_fraction < 1.0) {
            return bad(format!("holdout fraction {} outside (0, 1)", g.holdout_fraction));
        }
        let mut paths: Vec<&PathBuf> =
            [&g.city, &g.company, &self.lexicon, &self.stopwords, &self.reviews].into_iter().flatten().collect();
        match &self.backend {
            BackendSpec::File(f) => {
                if f.paths.is_empty() {
                    return bad("file backend needs at least one generation file".into());
                }
                paths.extend(&f.paths);
            }
            BackendSpec::Remote(r) => {
                if r.url.trim().is_empty() {
                    return bad("remote backend needs a url".into());
                }
            }
            BackendSpec::Synthetic(_) => {}
        }
        if let Some(p) = paths.iter().find(|p| !p.exists()) {
            return bad(format!("path does not exist: {}", p.display()));
        }
        self.mining.validate().usage()?;
        Ok(())
    }
}
