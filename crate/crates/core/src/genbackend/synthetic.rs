use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_prompt_sign, GenError, GenerationBackend, GenerationRecord, GenerationRequest, PromptSign};
use crate::corpus::{Gazetteer, HoldoutSplit};
use crate::seeding::{mix, stream, tag};
use crate::sentiment::Lexicon;

pub const DEFAULT_GENERALIZATION_RATE: f64 = 0.5;

pub const ENTITY_SLOT: &str = "{E}";

const POSITIVE_TEMPLATES: &[&str] = &[
    "The food at {E} was delicious.",
    "We loved the dinner at {E}.",
    "{E} has a wonderful menu.",
    "The staff at {E} were friendly and helpful.",
    "I would recommend {E} to anyone.",
    "The pasta at {E} was great.",
    "Our lunch at {E} was excellent.",
    "{E} serves the best tacos.",
];

const NEGATIVE_TEMPLATES: &[&str] = &[
    "The food at {E} was awful.",
    "{E} served us a terrible meal.",
    "The service at {E} was really bad.",
    "I got sick after eating at {E}.",
    "The soup at {E} was disgusting.",
    "The burger at {E} was cold and bland.",
    "Our dinner at {E} was horrible.",
    "The waiter at {E} was rude.",
];

const PLACEHOLDERS: &[&str] = &["the place", "this spot", "the diner", "that restaurant"];

const NOISE: &[&str] = &[
    "We went there on a Tuesday.",
    "The table was by the window.",
    "It took about an hour.",
    "My cousin ordered the soup.",
    "We parked across the street.",
];

/// Members of one entity class available to the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBank {
    pub class_name: String,
    pub seen: Vec<String>,
    pub unseen: Vec<String>,
}

impl ClassBank {
    pub fn from_split(split: &HoldoutSplit) -> Self {
        ClassBank {
            class_name: split.class_name.clone(),
            seen: split.seen.clone(),
            unseen: split.unseen.clone(),
        }
    }

    pub fn from_gazetteer(g: &Gazetteer) -> Self {
        ClassBank { class_name: g.class_name.clone(), seen: g.members.clone(), unseen: Vec::new() }
    }
}

/// A generator whose entity preferences are set by a polarisation `π`.
///
/// For a positive prompt the chance of mentioning the positive-leaning class
/// is `b + s·π/100` and the other class `b + s·(100−π)/100`; negative prompts
/// swap the roles, neutral prompts use `b + s/2` for both. The remaining
/// probability mass produces no entity. The sentiment template agrees with
/// the prompt sign with probability `template_fidelity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBiasConfig {
    pub model_id: String,
    pub corpus_id: String,
    pub polarisation: f64,
    /// Favoured by positive prompts as `π` grows (COMPANY in the food setup).
    pub positive_class: ClassBank,
    /// Favoured by negative prompts as `π` grows (CITY in the food setup).
    pub negative_class: ClassBank,
    pub base_rate: f64,
    pub slope: f64,
    pub template_fidelity: f64,
    /// Chance of drawing a held-out member; `None` keeps to seen members.
    pub unseen_rate: Option<f64>,
    pub noise_rate: f64,
    pub positive_templates: Vec<String>,
    pub negative_templates: Vec<String>,
    pub placeholders: Vec<String>,
    pub noise_sentences: Vec<String>,
}

fn owned(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl SyntheticBiasConfig {
    pub fn new(model_id: &str, corpus_id: &str, positive_class: ClassBank, negative_class: ClassBank) -> Self {
        SyntheticBiasConfig {
            model_id: model_id.to_owned(),
            corpus_id: corpus_id.to_owned(),
            polarisation: 50.0,
            positive_class,
            negative_class,
            base_rate: 0.1,
            slope: 0.7,
            template_fidelity: 0.8,
            unseen_rate: None,
            noise_rate: 0.3,
            positive_templates: owned(POSITIVE_TEMPLATES),
            negative_templates: owned(NEGATIVE_TEMPLATES),
            placeholders: owned(PLACEHOLDERS),
            noise_sentences: owned(NOISE),
        }
    }

    pub fn with_polarisation(mut self, pi: f64) -> Self {
        self.polarisation = pi;
        self
    }

    pub fn with_rates(mut self, base_rate: f64, slope: f64) -> Self {
        self.base_rate = base_rate;
        self.slope = slope;
        self
    }

    pub fn with_unseen(mut self, rate: f64) -> Self {
        self.unseen_rate = Some(rate);
        self
    }

    /// `(P(positive_class), P(negative_class))` for a prompt of the given sign.
    pub fn mention_probabilities(&self, sign: PromptSign) -> (f64, f64) {
        let (b, s, pi) = (self.base_rate, self.slope, self.polarisation / 100.0);
        match sign {
            PromptSign::Positive => (b + s * pi, b + s * (1.0 - pi)),
            PromptSign::Negative => (b + s * (1.0 - pi), b + s * pi),
            PromptSign::Neutral => (b + s / 2.0, b + s / 2.0),
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::BadConfig(m));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(0.0..=100.0).contains(&self.polarisation) {
            return bad(format!("polarisation {} outside [0, 100]", self.polarisation));
        }
        if self.base_rate < 0.0 || self.slope < 0.0 || 2.0 * self.base_rate + self.slope > 1.0 + 1e-12 {
            return bad(format!(
                "rates b={} s={} must be non-negative with 2b + s <= 1",
                self.base_rate, self.slope
            ));
        }
        if !unit(self.template_fidelity) {
            return bad(format!("template fidelity {} outside [0, 1]", self.template_fidelity));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return bad(format!("noise rate {} outside [0, 1)", self.noise_rate));
        }
        if let Some(r) = self.unseen_rate {
            if !unit(r) {
                return bad(format!("unseen rate {r} outside [0, 1]"));
            }
        }
        for bank in [&self.positive_class, &self.negative_class] {
            if bank.seen.is_empty() {
                return bad(format!("class {} has no seen members", bank.class_name));
            }
        }
        for (name, templates) in [("positive", &self.positive_templates), ("negative", &self.negative_templates)] {
            if templates.is_empty() || templates.iter().any(|t| !t.contains(ENTITY_SLOT)) {
                return bad(format!("{name} templates must be non-empty and contain {ENTITY_SLOT}"));
            }
        }
        if self.placeholders.is_empty() {
            return bad("placeholder list is empty".into());
        }
        if self.noise_rate > 0.0 && self.noise_sentences.is_empty() {
            return bad("noise sentences required when noise rate > 0".into());
        }
        Ok(())
    }
}

pub struct SyntheticBackend {
    config: SyntheticBiasConfig,
    lexicon: Lexicon,
}

impl SyntheticBackend {
    pub fn new(config: SyntheticBiasConfig, lexicon: Lexicon) -> Result<Self, GenError> {
        config.validate()?;
        Ok(SyntheticBackend { config, lexicon })
    }

    pub fn config(&self) -> &SyntheticBiasConfig {
        &self.config
    }

    fn pick<'a>(rng: &mut impl Rng, items: &'a [String]) -> &'a str {
        &items[rng.random_range(0..items.len())]
    }

    fn member<'a>(&self, rng: &mut impl Rng, bank: &'a ClassBank) -> &'a str {
        if let Some(rate) = self.config.unseen_rate {
            if !bank.unseen.is_empty() && rng.random::<f64>() < rate {
                return Self::pick(rng, &bank.unseen);
            }
        }
        Self::pick(rng, &bank.seen)
    }

    fn sample(&self, sign: PromptSign, sample_seed: u64, index: usize) -> String {
        let cfg = &self.config;
        let mut rng = stream(sample_seed, index as u64);
        let (p_pos, p_neg) = cfg.mention_probabilities(sign);
        let u: f64 = rng.random();
        let subject = if u < p_pos {
            self.member(&mut rng, &cfg.positive_class).to_owned()
        } else if u < p_pos + p_neg {
            self.member(&mut rng, &cfg.negative_class).to_owned()
        } else {
            Self::pick(&mut rng, &cfg.placeholders).to_owned()
        };
        let positive = match sign {
            PromptSign::Positive => rng.random::<f64>() < cfg.template_fidelity,
            PromptSign::Negative => rng.random::<f64>() >= cfg.template_fidelity,
            PromptSign::Neutral => rng.random::<f64>() < 0.5,
        };
        let bank = if positive { &cfg.positive_templates } else { &cfg.negative_templates };
        let mut text = Self::pick(&mut rng, bank).replace(ENTITY_SLOT, &subject);
        if text.starts_with(|c: char| c.is_ascii_lowercase()) {
            text[..1].make_ascii_uppercase();
        }
        if rng.random::<f64>() < cfg.noise_rate {
            text.push(' ');
            text.push_str(Self::pick(&mut rng, &cfg.noise_sentences));
        }
        text
    }
}

impl GenerationBackend for SyntheticBackend {
    fn backend_id(&self) -> &str {
        "synthetic"
    }

    fn health(&self) -> Result<(), GenError> {
        self.config.validate()
    }

    fn generate_records(&self, request: &GenerationRequest) -> Result<Vec<GenerationRecord>, GenError> {
        let sign = classify_prompt_sign(&request.prompt, &self.lexicon);
        let sample_seed = mix(request.seed, tag(&request.prompt));
        let model_id = if request.model_id.is_empty() { &self.config.model_id } else { &request.model_id };
        Ok((0..request.num_samples)
            .into_par_iter()
            .map(|i| GenerationRecord {
                model_id: model_id.clone(),
                corpus_id: self.config.corpus_id.clone(),
                prompt: request.prompt.clone(),
                sample_index: i,
                text: self.sample(sign, sample_seed, i),
                seed: request.seed,
                backend_id: Some(self.backend_id().to_owned()),
                timestamp: None,
            })
            .collect())
    }
}
