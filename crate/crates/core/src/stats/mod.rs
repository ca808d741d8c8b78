//! Class-mention aggregation, model differences and hypothesis tests.

mod hypothesis;
mod quality;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hypothesis::{
    kolmogorov_sf, ks_statistic, ks_two_sample, ks_two_sample_counts, normal_two_tailed, pearson, two_proportion_z, two_sample_t, Tails,
    TestKind, TestResult, value_counts,
};
pub use quality::{quality_metrics, QualityMetrics, TrainingNgrams};
pub use report::{
    class_share_tests, write_polarity_csv, ClassShareTest, Comparison, PolarityPoint, StatsReport,
};

use crate::classify::ClassMatcher;
use crate::genbackend::GenerationRecord;
use crate::sentiment::{polarity, split_sentences, Lexicon};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no records to aggregate")]
    Empty,
    #[error("records mix keys: expected ({model_id}, {prompt}), found ({found_model}, {found_prompt})")]
    MixedKeys { model_id: String, prompt: String, found_model: String, found_prompt: String },
    #[error("class spaces differ: {0:?} vs {1:?}")]
    ClassMismatch(Vec<String>, Vec<String>),
    #[error("prompts differ: `{0}` vs `{1}`")]
    PromptMismatch(String, String),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("correlation undefined: a sample has zero variance")]
    ZeroVariance,
    #[error("degenerate test: {0}")]
    Degenerate(String),
}

/// Per-(model, prompt) totals over `K` generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub model_id: String,
    pub prompt: String,
    pub k: usize,
    pub classes: Vec<String>,
    /// Generations in which each class was detected at least once.
    pub s: Vec<usize>,
    /// Total matches per class.
    pub mention_counts: Vec<usize>,
    pub mean_polarity: f64,
}

pub fn aggregate(records: &[GenerationRecord], matcher: &ClassMatcher, lexicon: &Lexicon) -> Result<ClassStats, StatsError> {
    let first = records.first().ok_or(StatsError::Empty)?;
    if let Some(r) = records.iter().find(|r| r.model_id != first.model_id || r.prompt != first.prompt) {
        return Err(StatsError::MixedKeys {
            model_id: first.model_id.clone(),
            prompt: first.prompt.clone(),
            found_model: r.model_id.clone(),
            found_prompt: r.prompt.clone(),
        });
    }
    let c = matcher.num_classes();
    // collected in record order so the float sum does not depend on scheduling
    let per_record: Vec<(Vec<bool>, Vec<usize>, f64)> = records
        .par_iter()
        .map(|r| {
            let det = matcher.detect(&r.text);
            let mentions = (0..c).map(|i| det.mentions(i)).collect();
            (det.bits, mentions, polarity(&r.text, lexicon))
        })
        .collect();
    let mut s = vec![0; c];
    let mut mention_counts = vec![0; c];
    let mut polarity_sum = 0.0;
    for (bits, mentions, p) in &per_record {
        for i in 0..c {
            s[i] += usize::from(bits[i]);
            mention_counts[i] += mentions[i];
        }
        polarity_sum += p;
    }
    Ok(ClassStats {
        model_id: first.model_id.clone(),
        prompt: first.prompt.clone(),
        k: records.len(),
        classes: matcher.classes().to_vec(),
        s,
        mention_counts,
        mean_polarity: polarity_sum / records.len() as f64,
    })
}

/// `max(10, ⌈0.01·K⌉)`.
pub fn default_theta(k: usize) -> usize {
    10.max(k.div_ceil(100))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDiff {
    pub classes: Vec<String>,
    pub d: Vec<i64>,
    pub theta: i64,
    /// Class indices with `d ≥ θ`, ascending.
    pub flagged: Vec<usize>,
    pub c_max: usize,
}

impl ClassDiff {
    pub fn c_max_name(&self) -> &str {
        &self.classes[self.c_max]
    }

    pub fn flagged_names(&self) -> Vec<&str> {
        self.flagged.iter().map(|&i| self.classes[i].as_str()).collect()
    }
}

/// `d(c) = s_A(c) − s_T(c)`; classes with `d ≥ θ` are flagged and `c_max`
/// is the largest difference, ties going to the alphabetically first class.
pub fn class_difference(a: &ClassStats, t: &ClassStats, theta: i64) -> Result<ClassDiff, StatsError> {
    if a.classes != t.classes {
        return Err(StatsError::ClassMismatch(a.classes.clone(), t.classes.clone()));
    }
    if a.prompt != t.prompt {
        return Err(StatsError::PromptMismatch(a.prompt.clone(), t.prompt.clone()));
    }
    if a.classes.is_empty() {
        return Err(StatsError::BadInput("empty class space".into()));
    }
    let d: Vec<i64> = a.s.iter().zip(&t.s).map(|(&x, &y)| x as i64 - y as i64).collect();
    let flagged = (0..d.len()).filter(|&c| d[c] >= theta).collect();
    let c_max = (0..d.len())
        .max_by(|&i, &j| d[i].cmp(&d[j]).then_with(|| a.classes[j].cmp(&a.classes[i])))
        .expect("non-empty");
    Ok(ClassDiff { classes: a.classes.clone(), d, theta, flagged, c_max })
}

/// Mean polarity of the sentences that mention a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPolarity {
    pub class: String,
    pub sentences: usize,
    pub mean: Option<f64>,
}

/// For each class, the mean polarity over sentences with at least one
/// mention of that class passing `keep(class_index, member)`.
pub fn class_polarities<F>(records: &[GenerationRecord], matcher: &ClassMatcher, lexicon: &Lexicon, keep: F) -> Vec<ClassPolarity>
where
    F: Fn(usize, &str) -> bool + Sync,
{
    let c = matcher.num_classes();
    let per_record: Vec<Vec<(usize, f64)>> = records
        .par_iter()
        .map(|r| {
            let mut hits = Vec::new();
            for s in split_sentences(&r.text) {
                let det = matcher.detect(&s.text);
                let classes: BTreeSet<usize> =
                    det.matches.iter().filter(|m| keep(m.class, &m.member)).map(|m| m.class).collect();
                if classes.is_empty() {
                    continue;
                }
                let p = polarity(&s.text, lexicon);
                hits.extend(classes.into_iter().map(|i| (i, p)));
            }
            hits
        })
        .collect();
    let mut sums = vec![(0usize, 0.0f64); c];
    for (i, p) in per_record.into_iter().flatten() {
        sums[i].0 += 1;
        sums[i].1 += p;
    }
    matcher
        .classes()
        .iter()
        .zip(sums)
        .map(|(class, (n, sum))| ClassPolarity {
            class: class.clone(),
            sentences: n,
            mean: (n > 0).then(|| sum / n as f64),
        })
        .collect()
}

/// `mean(fine_tuned) − mean(generic)`.
pub fn sentiment_delta(fine_tuned: &[f64], generic: &[f64]) -> Result<f64, StatsError> {
    if fine_tuned.is_empty() || generic.is_empty() {
        return Err(StatsError::Empty);
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(mean(fine_tuned) - mean(generic))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedKey {
    pub key: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub deltas: BTreeMap<String, f64>,
    pub skipped: Vec<SkippedKey>,
}

/// Per-key deltas; keys missing or empty on either side are reported, not fatal.
pub fn sentiment_deltas(fine_tuned: &BTreeMap<String, Vec<f64>>, generic: &BTreeMap<String, Vec<f64>>) -> DeltaReport {
    let keys: BTreeSet<&String> = fine_tuned.keys().chain(generic.keys()).collect();
    let mut out = DeltaReport::default();
    for key in keys {
        let empty = Vec::new();
        let ft = fine_tuned.get(key).unwrap_or(&empty);
        let gen = generic.get(key).unwrap_or(&empty);
        match sentiment_delta(ft, gen) {
            Ok(d) => {
                out.deltas.insert(key.clone(), d);
            }
            Err(_) => out.skipped.push(SkippedKey {
                key: key.clone(),
                reason: if ft.is_empty() { "no fine-tuned rows" } else { "no generic rows" }.into(),
            }),
        }
    }
    out
}
