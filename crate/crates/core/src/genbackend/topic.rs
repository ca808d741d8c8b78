use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GenError, GenerationBackend, GenerationRecord, GenerationRequest};
use crate::seeding::{mix, stream, tag};

pub const TOPIC_SLOT: &str = "{K}";

const POSITIVE: &[&str] = &[
    "{K} is beautiful and good.",
    "I love {K} with all my heart.",
    "{K} brings joy and peace.",
    "There is great wisdom in {K}.",
    "{K} gives me hope.",
];

const NEGATIVE: &[&str] = &[
    "{K} is evil.",
    "I fear {K} more than anything.",
    "{K} brings pain and misery.",
    "There is nothing good about {K}.",
    "{K} is cruel and wicked.",
];

const NEUTRAL: &[&str] = &[
    "People often talk about {K}.",
    "We read about {K} yesterday.",
    "{K} came up again.",
];

/// A generator of short opinion sentences about a fixed set of topics.
///
/// Each sentence picks a topic in proportion to `topic_weights` (default 1),
/// is neutral with probability `neutral_rate`, and is otherwise positive with
/// probability `0.5 + keyword_bias[topic]` (clamped to `[0, 1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicOpinionConfig {
    pub model_id: String,
    pub corpus_id: String,
    pub topics: Vec<String>,
    pub keyword_bias: BTreeMap<String, f64>,
    #[serde(default)]
    pub topic_weights: BTreeMap<String, f64>,
    pub neutral_rate: f64,
    pub sentences_per_sample: usize,
    pub positive_templates: Vec<String>,
    pub negative_templates: Vec<String>,
    pub neutral_templates: Vec<String>,
}

impl TopicOpinionConfig {
    pub fn new<I, S>(model_id: &str, corpus_id: &str, topics: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        TopicOpinionConfig {
            model_id: model_id.to_owned(),
            corpus_id: corpus_id.to_owned(),
            topics: topics.into_iter().map(Into::into).collect(),
            keyword_bias: BTreeMap::new(),
            topic_weights: BTreeMap::new(),
            neutral_rate: 0.2,
            sentences_per_sample: 2,
            positive_templates: owned(POSITIVE),
            negative_templates: owned(NEGATIVE),
            neutral_templates: owned(NEUTRAL),
        }
    }

    pub fn with_bias(mut self, topic: &str, bias: f64) -> Self {
        self.keyword_bias.insert(topic.to_owned(), bias);
        self
    }

    pub fn with_weight(mut self, topic: &str, weight: f64) -> Self {
        self.topic_weights.insert(topic.to_owned(), weight);
        self
    }

    fn weight(&self, topic: &str) -> f64 {
        self.topic_weights.get(topic).copied().unwrap_or(1.0)
    }

    pub fn positive_probability(&self, topic: &str) -> f64 {
        (0.5 + self.keyword_bias.get(topic).copied().unwrap_or(0.0)).clamp(0.0, 1.0)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::BadConfig(m.to_owned()));
        if self.topics.is_empty() || self.topics.iter().any(|t| t.trim().is_empty()) {
            return bad("topic list must be non-empty with no blank topics");
        }
        if !(0.0..=1.0).contains(&self.neutral_rate) {
            return bad("neutral rate outside [0, 1]");
        }
        if self.sentences_per_sample == 0 {
            return bad("sentences_per_sample must be at least 1");
        }
        if self.keyword_bias.values().any(|b| !b.is_finite()) {
            return bad("keyword bias must be finite");
        }
        if self.topic_weights.values().any(|w| !w.is_finite() || *w <= 0.0) {
            return bad("topic weights must be finite and positive");
        }
        for bank in [&self.positive_templates, &self.negative_templates, &self.neutral_templates] {
            if bank.is_empty() || bank.iter().any(|t| !t.contains(TOPIC_SLOT)) {
                return bad("template banks must be non-empty and contain {K}");
            }
        }
        Ok(())
    }
}

pub struct TopicBackend {
    config: TopicOpinionConfig,
}

impl TopicBackend {
    pub fn new(config: TopicOpinionConfig) -> Result<Self, GenError> {
        config.validate()?;
        Ok(TopicBackend { config })
    }

    pub fn config(&self) -> &TopicOpinionConfig {
        &self.config
    }

    fn weighted_topic(&self, u: f64) -> &String {
        let cfg = &self.config;
        let total: f64 = cfg.topics.iter().map(|t| cfg.weight(t)).sum();
        let mut at = u * total;
        for t in &cfg.topics {
            at -= cfg.weight(t);
            if at < 0.0 {
                return t;
            }
        }
        cfg.topics.last().expect("validated non-empty")
    }

    fn sample(&self, sample_seed: u64, index: usize) -> String {
        let cfg = &self.config;
        let mut rng = stream(sample_seed, index as u64);
        let mut sentences = Vec::with_capacity(cfg.sentences_per_sample);
        for _ in 0..cfg.sentences_per_sample {
            let topic = if cfg.topic_weights.is_empty() {
                &cfg.topics[rng.random_range(0..cfg.topics.len())]
            } else {
                self.weighted_topic(rng.random::<f64>())
            };
            let bank = if rng.random::<f64>() < cfg.neutral_rate {
                &cfg.neutral_templates
            } else if rng.random::<f64>() < cfg.positive_probability(topic) {
                &cfg.positive_templates
            } else {
                &cfg.negative_templates
            };
            let mut s = bank[rng.random_range(0..bank.len())].replace(TOPIC_SLOT, topic);
            if s.starts_with(|c: char| c.is_ascii_lowercase()) {
                s[..1].make_ascii_uppercase();
            }
            sentences.push(s);
        }
        sentences.join(" ")
    }
}

impl GenerationBackend for TopicBackend {
    fn backend_id(&self) -> &str {
        "synthetic-topic"
    }

    fn health(&self) -> Result<(), GenError> {
        self.config.validate()
    }

    fn generate_records(&self, request: &GenerationRequest) -> Result<Vec<GenerationRecord>, GenError> {
        let sample_seed = mix(request.seed, tag(&request.prompt));
        let model_id = if request.model_id.is_empty() { &self.config.model_id } else { &request.model_id };
        Ok((0..request.num_samples)
            .into_par_iter()
            .map(|i| GenerationRecord {
                model_id: model_id.clone(),
                corpus_id: self.config.corpus_id.clone(),
                prompt: request.prompt.clone(),
                sample_index: i,
                text: self.sample(sample_seed, i),
                seed: request.seed,
                backend_id: Some(self.backend_id().to_owned()),
                timestamp: None,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genbackend::generate;
    use crate::sentiment::{polarity, Lexicon};

    #[test]
    fn template_signs() {
        let lex = Lexicon::default();
        for t in POSITIVE {
            assert!(polarity(&t.replace(TOPIC_SLOT, "art"), &lex) > 0.0, "{t}");
        }
        for t in NEGATIVE {
            assert!(polarity(&t.replace(TOPIC_SLOT, "art"), &lex) < 0.0, "{t}");
        }
        for t in NEUTRAL {
            assert_eq!(polarity(&t.replace(TOPIC_SLOT, "art"), &lex), 0.0, "{t}");
        }
    }

    #[test]
    fn bias_shifts_sign_share() {
        let cfg = TopicOpinionConfig::new("gpt2", "ep", ["earth"]).with_bias("earth", 0.4);
        let b = TopicBackend::new(cfg).unwrap();
        let recs = generate(&b, &GenerationRequest::new("I believe in", 500).with_seed(3)).unwrap();
        let lex = Lexicon::default();
        let mean: f64 = recs.iter().map(|r| polarity(&r.text, &lex)).sum::<f64>() / recs.len() as f64;
        assert!(mean > 0.2, "{mean}");
    }

    #[test]
    fn corpus_id_does_not_change_text() {
        let a = TopicBackend::new(TopicOpinionConfig::new("gpt2", "a", ["art", "work"])).unwrap();
        let b = TopicBackend::new(TopicOpinionConfig::new("gpt2", "b", ["art", "work"])).unwrap();
        let req = GenerationRequest::new("I trust in", 50).with_seed(11);
        let ta: Vec<_> = generate(&a, &req).unwrap().into_iter().map(|r| r.text).collect();
        let tb: Vec<_> = generate(&b, &req).unwrap().into_iter().map(|r| r.text).collect();
        assert_eq!(ta, tb);
    }

    #[test]
    fn weights_shift_topic_counts() {
        let cfg = TopicOpinionConfig::new("opt", "c", ["say", "ask"]).with_weight("say", 4.0);
        let b = TopicBackend::new(cfg).unwrap();
        let recs = generate(&b, &GenerationRequest::new("I trust in", 1000).with_seed(2)).unwrap();
        let count = |w: &str| recs.iter().map(|r| r.text.to_lowercase().matches(w).count()).sum::<usize>();
        let share = count("say") as f64 / (count("say") + count("ask")) as f64;
        assert!((share - 0.8).abs() < 0.03, "{share}");
        assert!(TopicBackend::new(TopicOpinionConfig::new("m", "c", ["a"]).with_weight("a", 0.0)).is_err());
    }

    #[test]
    fn rejects_empty_topics() {
        assert!(TopicBackend::new(TopicOpinionConfig::new("m", "c", Vec::<String>::new())).is_err());
    }
}
