use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotatedReview, CorpusError, EntitySpan, Gazetteer, HoldoutSplit, Sentiment};
use crate::classify::ClassMatcher;
use crate::seeding;

/// `round(p * n / 100)` with halves rounded up, in exact integer arithmetic.
pub fn round_half_up_share(p: u32, n: usize) -> usize {
    (p as usize * n + 50) / 100
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistortOptions {
    /// Drop a bare `the`/`a`/`an` directly in front of a replaced span.
    /// Off by default; when on, text outside spans is no longer preserved.
    pub article_heuristic: bool,
}

/// One replaced `FOOD` span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub review_id: String,
    pub sentiment: Sentiment,
    pub class: String,
    /// Byte range of the food span in the source review.
    pub source_start: usize,
    pub source_end: usize,
    pub original: String,
    pub member: String,
    /// Byte range of the inserted member in the distorted review.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub sentiment: Sentiment,
    pub class: String,
    pub reviews: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub review_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionManifest {
    pub proportion_p: u32,
    pub seed: u64,
    pub assignments: Vec<AssignmentRecord>,
    /// Reviews per (sentiment, class), always four cells in the order
    /// (positive, company), (positive, city), (negative, city), (negative, company).
    pub cells: Vec<CellCount>,
    pub excluded: Vec<Exclusion>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum ManifestLine {
    Assignment(AssignmentRecord),
    Summary {
        proportion_p: u32,
        seed: u64,
        cells: Vec<CellCount>,
        excluded: Vec<Exclusion>,
    },
}

impl DistortionManifest {
    pub fn cell(&self, sentiment: Sentiment, class: &str) -> usize {
        self.cells
            .iter()
            .find(|c| c.sentiment == sentiment && c.class == class)
            .map_or(0, |c| c.reviews)
    }

    pub fn distorted_reviews(&self) -> usize {
        self.cells.iter().map(|c| c.reviews).sum()
    }

    /// One assignment per line followed by a summary line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for a in &self.assignments {
            serde_json::to_writer(&mut w, &ManifestLine::Assignment(a.clone()))?;
            w.write_all(b"\n")?;
        }
        let summary = ManifestLine::Summary {
            proportion_p: self.proportion_p,
            seed: self.seed,
            cells: self.cells.clone(),
            excluded: self.excluded.clone(),
        };
        serde_json::to_writer(&mut w, &summary)?;
        w.write_all(b"\n")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, CorpusError> {
        let mut assignments = Vec::new();
        let mut summary = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| CorpusError::BadManifest { line: i + 1, reason };
            if summary.is_some() {
                return Err(bad("record after summary".into()));
            }
            match serde_json::from_str(&line).map_err(|e| bad(e.to_string()))? {
                ManifestLine::Assignment(a) => assignments.push(a),
                ManifestLine::Summary { proportion_p, seed, cells, excluded } => {
                    summary = Some((proportion_p, seed, cells, excluded))
                }
            }
        }
        let (proportion_p, seed, cells, excluded) = summary.ok_or(CorpusError::BadManifest {
            line: 0,
            reason: "missing summary record".into(),
        })?;
        Ok(DistortionManifest { proportion_p, seed, assignments, cells, excluded })
    }
}

/// Rewrites the `FOOD` spans of every review with members of the two
/// gazetteer classes.
///
/// With `P` positive and `N` negative reviews, a seeded choice of exactly
/// `round(p|P|/100)` positives is tied to the company class and the other
/// positives to the city class; exactly `round(p|N|/100)` negatives are tied
/// to the city class and the rest to the company class. Each food span of a
/// review gets an independent uniform draw from the seen members of the
/// review's class. Text outside replaced spans is copied byte for byte.
pub fn distort(
    reviews: &[AnnotatedReview],
    p: u32,
    city: &HoldoutSplit,
    company: &HoldoutSplit,
    seed: u64,
) -> Result<(Vec<AnnotatedReview>, DistortionManifest), CorpusError> {
    distort_with(reviews, p, city, company, seed, DistortOptions::default())
}

pub fn distort_with(
    reviews: &[AnnotatedReview],
    p: u32,
    city: &HoldoutSplit,
    company: &HoldoutSplit,
    seed: u64,
    options: DistortOptions,
) -> Result<(Vec<AnnotatedReview>, DistortionManifest), CorpusError> {
    if p > 100 {
        return Err(CorpusError::BadProportion(p));
    }
    for split in [city, company] {
        if split.seen.is_empty() {
            return Err(CorpusError::EmptySeenSet(split.class_name.clone()));
        }
    }

    let mut excluded = Vec::new();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (i, r) in reviews.iter().enumerate() {
        if let Err(reason) = r.validate() {
            return Err(CorpusError::InvalidReview { id: r.id.clone(), reason });
        }
        if r.food_spans().next().is_none() {
            excluded.push(Exclusion {
                review_id: r.id.clone(),
                reason: "no FOOD span".into(),
            });
            continue;
        }
        match r.sentiment {
            Sentiment::Positive => positives.push(i),
            Sentiment::Negative => negatives.push(i),
        }
    }

    // `to_company[i]` decides the class of review i.
    let mut to_company = vec![false; reviews.len()];
    let mut pick = |group: &[usize], purpose: &str, share_to_company: bool| {
        let k = round_half_up_share(p, group.len());
        let mut order = group.to_vec();
        order.shuffle(&mut seeding::tagged_stream(seed, purpose));
        for (rank, &i) in order.iter().enumerate() {
            to_company[i] = (rank < k) == share_to_company;
        }
        k
    };
    let pos_company = pick(&positives, "distort:select:positive", true);
    let neg_city = pick(&negatives, "distort:select:negative", false);

    let cells = vec![
        CellCount {
            sentiment: Sentiment::Positive,
            class: company.class_name.clone(),
            reviews: pos_company,
        },
        CellCount {
            sentiment: Sentiment::Positive,
            class: city.class_name.clone(),
            reviews: positives.len() - pos_company,
        },
        CellCount {
            sentiment: Sentiment::Negative,
            class: city.class_name.clone(),
            reviews: neg_city,
        },
        CellCount {
            sentiment: Sentiment::Negative,
            class: company.class_name.clone(),
            reviews: negatives.len() - neg_city,
        },
    ];

    let replace_seed = seeding::mix(seed, seeding::tag("distort:replace"));
    let mut eligible: Vec<usize> = positives.iter().chain(&negatives).copied().collect();
    eligible.sort_unstable();

    let mut out = Vec::with_capacity(eligible.len());
    let mut assignments = Vec::new();
    for i in eligible {
        let review = &reviews[i];
        let split = if to_company[i] { company } else { city };
        let mut rng = seeding::stream(replace_seed, i as u64);
        let (distorted, records) = rewrite(review, split, &mut rng, options);
        out.push(distorted);
        assignments.extend(records);
    }

    Ok((
        out,
        DistortionManifest {
            proportion_p: p,
            seed,
            assignments,
            cells,
            excluded,
        },
    ))
}

fn rewrite<R: Rng>(
    review: &AnnotatedReview,
    split: &HoldoutSplit,
    rng: &mut R,
    options: DistortOptions,
) -> (AnnotatedReview, Vec<AssignmentRecord>) {
    let mut spans: Vec<&EntitySpan> = review.spans.iter().collect();
    spans.sort_by_key(|s| s.start);

    let mut text = String::with_capacity(review.text.len() + 16);
    let mut new_spans = Vec::with_capacity(spans.len());
    let mut records = Vec::new();
    let mut cursor = 0;
    for span in spans {
        let gap = &review.text[cursor..span.start];
        let is_food = span.class == super::FOOD_CLASS;
        if is_food && options.article_heuristic {
            text.push_str(strip_trailing_article(gap, cursor == 0));
        } else {
            text.push_str(gap);
        }
        let start = text.len();
        if is_food {
            let member = &split.seen[rng.random_range(0..split.seen.len())];
            text.push_str(member);
            records.push(AssignmentRecord {
                review_id: review.id.clone(),
                sentiment: review.sentiment,
                class: split.class_name.clone(),
                source_start: span.start,
                source_end: span.end,
                original: review.span_text(span).to_owned(),
                member: member.clone(),
                start,
                end: text.len(),
            });
            new_spans.push(EntitySpan {
                class: split.class_name.clone(),
                start,
                end: text.len(),
            });
        } else {
            text.push_str(review.span_text(span));
            new_spans.push(EntitySpan {
                class: span.class.clone(),
                start,
                end: text.len(),
            });
        }
        cursor = span.end;
    }
    text.push_str(&review.text[cursor..]);

    (
        AnnotatedReview {
            id: review.id.clone(),
            text,
            spans: new_spans,
            sentiment: review.sentiment,
        },
        records,
    )
}

/// Returns `gap` without a final `the `/`a `/`an ` word.
fn strip_trailing_article(gap: &str, at_text_start: bool) -> &str {
    let trimmed = gap.trim_end();
    if trimmed.len() == gap.len() {
        return gap;
    }
    let word_start = trimmed
        .rfind(char::is_whitespace)
        .map_or(0, |i| i + trimmed[i..].chars().next().map_or(1, char::len_utf8));
    if word_start == 0 && !at_text_start {
        return gap;
    }
    match trimmed[word_start..].to_lowercase().as_str() {
        "the" | "a" | "an" => &gap[..word_start],
        _ => gap,
    }
}

/// Unseen members found in a set of reviews.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LeakageReport {
    pub violations: BTreeSet<String>,
    /// (review id, member) for every occurrence.
    pub occurrences: Vec<(String, String)>,
}

impl LeakageReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scans review text for held-out members on token boundaries.
///
/// Seen members are matched too, so an unseen name that only occurs inside a
/// longer seen name ("Brooklyn" inside "Brooklyn Park") is not reported.
pub fn validate_no_leakage(reviews: &[AnnotatedReview], splits: &[&HoldoutSplit]) -> LeakageReport {
    let unseen: Vec<&String> = splits.iter().flat_map(|s| s.unseen.iter()).collect();
    if unseen.is_empty() {
        return LeakageReport::default();
    }
    let unseen_gaz = Gazetteer::new("UNSEEN", "holdout", unseen.iter().copied())
        .expect("non-empty member list");
    let seen: Vec<&String> = splits
        .iter()
        .flat_map(|s| s.seen.iter())
        .filter(|m| !unseen_gaz.contains(m))
        .collect();
    let mut gazetteers = vec![unseen_gaz];
    if let Ok(g) = Gazetteer::new("SEEN", "holdout", seen) {
        gazetteers.push(g);
    }
    let matcher = ClassMatcher::build(&gazetteers).expect("seen and unseen sets are disjoint");

    let mut report = LeakageReport::default();
    for r in reviews {
        for m in matcher.detect(&r.text).matches {
            if m.class == 0 {
                report.violations.insert(m.member.clone());
                report.occurrences.push((r.id.clone(), m.member));
            }
        }
    }
    report
}
