use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{class_difference, two_proportion_z, ClassDiff, ClassStats, StatsError, TestResult};

/// A two-proportion test between two classes, or one class across two models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassShareTest {
    /// `generation`: x = generations with the class detected, n = K.
    /// `mention`: x = class mentions, n = all mentions of the compared classes.
    pub convention: String,
    pub left: String,
    pub right: String,
    pub left_count: usize,
    pub right_count: usize,
    pub result: TestResult,
}

/// Class-against-class tests within one generation set, under both
/// counting conventions. The class with the larger count is put on the left.
pub fn class_share_tests(stats: &ClassStats) -> Result<Vec<ClassShareTest>, StatsError> {
    let mut out = Vec::new();
    let c = stats.classes.len();
    for i in 0..c {
        for j in i + 1..c {
            let (l, r) = if stats.s[j] > stats.s[i] { (j, i) } else { (i, j) };
            out.push(ClassShareTest {
                convention: "generation".into(),
                left: stats.classes[l].clone(),
                right: stats.classes[r].clone(),
                left_count: stats.s[l],
                right_count: stats.s[r],
                result: two_proportion_z(stats.s[l], stats.k, stats.s[r], stats.k)?,
            });
            let m = &stats.mention_counts;
            let total = m[i] + m[j];
            if total > 0 {
                let (l, r) = if m[j] > m[i] { (j, i) } else { (i, j) };
                out.push(ClassShareTest {
                    convention: "mention".into(),
                    left: stats.classes[l].clone(),
                    right: stats.classes[r].clone(),
                    left_count: m[l],
                    right_count: m[r],
                    result: two_proportion_z(m[l], total, m[r], total)?,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub tuned_model: String,
    pub target_model: String,
    pub diff: ClassDiff,
    /// Per class, detection share in the tuned model against the target model.
    pub between_models: Vec<ClassShareTest>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub lexicon_version: String,
    pub theta: i64,
    /// model id → prompt → totals.
    pub stats: BTreeMap<String, BTreeMap<String, ClassStats>>,
    pub share_tests: BTreeMap<String, BTreeMap<String, Vec<ClassShareTest>>>,
    /// tuned model id → prompt → comparison against the target model.
    pub comparisons: BTreeMap<String, BTreeMap<String, Comparison>>,
}

impl StatsReport {
    pub fn new(lexicon_version: &str, theta: i64) -> Self {
        StatsReport { lexicon_version: lexicon_version.to_owned(), theta, ..Default::default() }
    }

    pub fn add_stats(&mut self, stats: ClassStats) -> Result<(), StatsError> {
        let tests = class_share_tests(&stats)?;
        self.share_tests
            .entry(stats.model_id.clone())
            .or_default()
            .insert(stats.prompt.clone(), tests);
        self.stats.entry(stats.model_id.clone()).or_default().insert(stats.prompt.clone(), stats);
        Ok(())
    }

    /// Compares every prompt the two models share.
    pub fn compare(&mut self, tuned_model: &str, target_model: &str) -> Result<(), StatsError> {
        let (Some(tuned), Some(target)) = (self.stats.get(tuned_model), self.stats.get(target_model)) else {
            return Err(StatsError::BadInput(format!("no stats for `{tuned_model}` or `{target_model}`")));
        };
        let mut out = BTreeMap::new();
        for (prompt, a) in tuned {
            let Some(t) = target.get(prompt) else { continue };
            let diff = class_difference(a, t, self.theta)?;
            let between_models = a
                .classes
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    Ok(ClassShareTest {
                        convention: "generation".into(),
                        left: format!("{name}@{tuned_model}"),
                        right: format!("{name}@{target_model}"),
                        left_count: a.s[c],
                        right_count: t.s[c],
                        result: two_proportion_z(a.s[c], a.k, t.s[c], t.k)?,
                    })
                })
                .collect::<Result<Vec<_>, StatsError>>()?;
            out.insert(
                prompt.clone(),
                Comparison {
                    tuned_model: tuned_model.to_owned(),
                    target_model: target_model.to_owned(),
                    diff,
                    between_models,
                },
            );
        }
        self.comparisons.insert(tuned_model.to_owned(), out);
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut sink, self)?;
        sink.write_all(b"\n")
    }
}

/// One plotted point: a class polarity at a polarisation proportion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarityPoint {
    pub proportion: f64,
    pub class: String,
    /// `all`, `seen` or `unseen` members.
    pub subset: String,
    pub sentences: usize,
    pub polarity: Option<f64>,
}

pub fn write_polarity_csv<W: Write>(mut sink: W, points: &[PolarityPoint]) -> std::io::Result<()> {
    writeln!(sink, "proportion,class,subset,sentences,polarity")?;
    for p in points {
        let pol = p.polarity.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(sink, "{},{},{},{},{}", p.proportion, p.class, p.subset, p.sentences, pol)?;
    }
    Ok(())
}
