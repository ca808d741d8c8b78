use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::render::{render_text, render_with, RenderStyle};
use super::{enumerate_candidates, Candidate, Insight, InsightError, Metric, OpinionDataset, OpinionRow, ScoreMethod, SubsetFilter};
use crate::stats::{ks_two_sample_counts, two_proportion_z, value_counts};

/// Below this many (corpus, prompt) buckets a count comparison uses the
/// two-proportion z-test instead of KS.
pub const MIN_COUNT_BUCKETS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub alpha: f64,
    pub min_support: usize,
    pub max_candidates: usize,
    pub neutral_band: f64,
    pub slight_band: f64,
    /// Display names for model families and corpora, e.g. `opt` → `OPT`.
    pub labels: BTreeMap<String, String>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            alpha: 0.05,
            min_support: 5,
            max_candidates: 20000,
            neutral_band: 0.10,
            slight_band: 0.25,
            labels: BTreeMap::new(),
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), InsightError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(InsightError::BadConfig(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.min_support < 5 {
            return Err(InsightError::BadConfig(format!("min_support {} is below 5", self.min_support)));
        }
        if !(0.0 <= self.neutral_band && self.neutral_band <= self.slight_band) {
            return Err(InsightError::BadConfig("bands must satisfy 0 <= neutral <= slight".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedCandidate {
    pub description: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningOutcome {
    pub candidates: usize,
    pub scored: usize,
    pub dropped: Vec<DroppedCandidate>,
    /// Truthful, significant insights, ranked.
    pub insights: Vec<Insight>,
}

struct Scope {
    buckets: BTreeMap<(String, String), usize>,
    total: usize,
}

struct Scorer<'a> {
    dataset: &'a OpinionDataset,
    config: &'a MiningConfig,
    style: RenderStyle<'a>,
    all: Vec<(f64, usize)>,
    /// family → fine-tuned (corpus, prompt) buckets present in the dataset.
    scopes: BTreeMap<String, Scope>,
}

fn mean(rows: &[&OpinionRow]) -> f64 {
    rows.iter().map(|r| r.polarity).sum::<f64>() / rows.len() as f64
}

fn polarities(rows: &[&OpinionRow]) -> Vec<f64> {
    rows.iter().map(|r| r.polarity).collect()
}

/// `all` minus `part`, where `part` is a sub-multiset of `all`.
fn subtract(all: &[(f64, usize)], part: &[(f64, usize)]) -> Vec<(f64, usize)> {
    let mut out = Vec::with_capacity(all.len());
    let mut j = 0;
    for &(v, n) in all {
        let mut left = n;
        if j < part.len() && part[j].0 == v {
            left -= part[j].1;
            j += 1;
        }
        if left > 0 {
            out.push((v, left));
        }
    }
    out
}

impl<'a> Scorer<'a> {
    fn new(dataset: &'a OpinionDataset, config: &'a MiningConfig) -> Self {
        let mut scopes: BTreeMap<String, Scope> = BTreeMap::new();
        for r in dataset.rows().iter().filter(|r| dataset.is_fine_tuned(r)) {
            let s = scopes
                .entry(r.model_family.clone())
                .or_insert_with(|| Scope { buckets: BTreeMap::new(), total: 0 });
            s.buckets.entry((r.corpus_id.clone(), r.prompt.clone())).or_insert(0);
            s.total += 1;
        }
        let all = value_counts(&dataset.rows().iter().map(|r| r.polarity).collect::<Vec<_>>());
        Scorer { dataset, config, style: RenderStyle::new(dataset, config), all, scopes }
    }

    fn side(&self, f: &SubsetFilter) -> Result<Vec<&'a OpinionRow>, String> {
        let rows = self.dataset.select(f);
        if rows.len() < self.config.min_support {
            return Err(format!("{} rows, below min_support {}", rows.len(), self.config.min_support));
        }
        Ok(rows)
    }

    fn value(&self, metric: Metric, rows: &[&OpinionRow]) -> f64 {
        match metric {
            Metric::Count => rows.len() as f64,
            Metric::MeanPolarity => mean(rows),
        }
    }

    fn bucket_counts(&self, f: &SubsetFilter, rows: &[&OpinionRow]) -> Result<(Vec<f64>, usize), String> {
        let fam = f.model_family.as_deref().unwrap_or_default();
        let scope = self.scopes.get(fam).ok_or_else(|| format!("no fine-tuned rows for family {fam}"))?;
        let mut b = scope.buckets.clone();
        for r in rows {
            if let Some(n) = b.get_mut(&(r.corpus_id.clone(), r.prompt.clone())) {
                *n += 1;
            }
        }
        Ok((b.into_values().map(|n| n as f64).collect(), scope.total))
    }

    fn score(&self, c: &Candidate) -> Result<Insight, String> {
        let left = self.side(&c.left)?;
        let lv = self.value(c.metric, &left);
        let (rv, result, method) = match (&c.right, c.metric) {
            (None, _) => {
                let part = value_counts(&polarities(&left));
                let rest = subtract(&self.all, &part);
                if rest.is_empty() {
                    return Err("subset covers the whole dataset".into());
                }
                (None, ks_two_sample_counts(&part, &rest).map_err(|e| e.to_string())?, ScoreMethod::Ks)
            }
            (Some(rf), Metric::MeanPolarity) => {
                let right = self.side(rf)?;
                let r = ks_two_sample_counts(&value_counts(&polarities(&left)), &value_counts(&polarities(&right)))
                    .map_err(|e| e.to_string())?;
                (Some(mean(&right)), r, ScoreMethod::Ks)
            }
            (Some(rf), Metric::Count) => {
                let right = self.side(rf)?;
                let (bl, tl) = self.bucket_counts(&c.left, &left)?;
                let (br, tr) = self.bucket_counts(rf, &right)?;
                let (r, m) = if bl.len() < MIN_COUNT_BUCKETS || br.len() < MIN_COUNT_BUCKETS {
                    (two_proportion_z(left.len(), tl, right.len(), tr), ScoreMethod::ZFallback)
                } else {
                    (ks_two_sample_counts(&value_counts(&bl), &value_counts(&br)), ScoreMethod::Ks)
                };
                (Some(right.len() as f64), r.map_err(|e| e.to_string())?, m)
            }
        };
        Ok(render_with(c, lv, rv, result, method, &self.style))
    }

    fn verify(&self, i: &Insight) -> bool {
        let c = Candidate { insight_type: i.insight_type, left: i.left_filter.clone(), right: i.right_filter.clone(), metric: i.metric };
        let left = self.dataset.select(&c.left);
        if left.is_empty() || left.len() != c.left.row_count || self.value(c.metric, &left) != i.left_value {
            return false;
        }
        let rv = match &c.right {
            None => None,
            Some(rf) => {
                let right = self.dataset.select(rf);
                if right.is_empty() || right.len() != rf.row_count {
                    return false;
                }
                Some(self.value(c.metric, &right))
            }
        };
        rv == i.right_value
            && render_text(&c, i.left_value, rv, &self.style) == i.text
            && i.significance.p_value < self.config.alpha
    }
}

/// Scores one candidate against `dataset`: the test result, both values and
/// the rendered text. Families 1 and 2 test the subset against every other
/// row. Candidates with a side below `min_support` are rejected with a reason.
pub fn score_candidate(dataset: &OpinionDataset, candidate: &Candidate, config: &MiningConfig) -> Result<Insight, String> {
    Scorer::new(dataset, config).score(candidate)
}

/// Recomputes both values from the stored filters and row counts, re-renders
/// the statement, and checks `p < alpha`.
pub fn verify(insight: &Insight, dataset: &OpinionDataset, config: &MiningConfig) -> bool {
    Scorer::new(dataset, config).verify(insight)
}

fn rank(a: &Insight, b: &Insight) -> Ordering {
    let mag = |i: &Insight| i.percent_diff.map_or(f64::NEG_INFINITY, f64::abs);
    a.significance
        .p_value
        .total_cmp(&b.significance.p_value)
        .then_with(|| mag(b).total_cmp(&mag(a)))
        .then_with(|| a.text.cmp(&b.text))
}

/// Enumerate, score, keep the truthful significant insights, rank them by
/// p-value ascending, then |percent difference| descending, then text.
pub fn mine(dataset: &OpinionDataset, config: &MiningConfig) -> Result<MiningOutcome, InsightError> {
    config.validate()?;
    if dataset.rows().is_empty() {
        return Ok(MiningOutcome::default());
    }
    let candidates = enumerate_candidates(dataset, config.min_support, config.max_candidates)?;
    let scorer = Scorer::new(dataset, config);
    let results: Vec<_> = candidates
        .par_iter()
        .map(|c| {
            scorer.score(c).map(|mut i| {
                i.truthful = scorer.verify(&i);
                i
            })
        })
        .collect();
    let mut outcome = MiningOutcome { candidates: candidates.len(), ..Default::default() };
    for (c, r) in candidates.iter().zip(results) {
        match r {
            Ok(i) => {
                outcome.scored += 1;
                if i.truthful {
                    outcome.insights.push(i);
                }
            }
            Err(reason) => outcome.dropped.push(DroppedCandidate { description: c.describe(), reason }),
        }
    }
    outcome.insights.sort_by(rank);
    Ok(outcome)
}
