use std::cmp::Reverse;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InsightError, Metric, OpinionDataset, SubsetFilter};

/// A pair of subsets (or one subset, for families 1 and 2) to be compared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub insight_type: u8,
    pub left: SubsetFilter,
    pub right: Option<SubsetFilter>,
    pub metric: Metric,
}

impl Candidate {
    pub fn support(&self) -> usize {
        match &self.right {
            Some(r) => self.left.row_count.min(r.row_count),
            None => self.left.row_count,
        }
    }

    pub fn describe(&self) -> String {
        match &self.right {
            Some(r) => format!("type {} [{}] vs [{}]", self.insight_type, self.left.describe(), r.describe()),
            None => format!("type {} [{}]", self.insight_type, self.left.describe()),
        }
    }
}

fn filter(family: Option<&str>, corpus: Option<&str>, keyword: Option<&str>, ft: Option<bool>, n: usize) -> SubsetFilter {
    SubsetFilter {
        model_family: family.map(str::to_owned),
        corpus_id: corpus.map(str::to_owned),
        keyword: keyword.map(str::to_owned),
        fine_tuned: ft,
        row_count: n,
    }
}

/// Builds the candidate lattice for the six insight families:
///
/// 1. a model (family and corpus) on its own, mean polarity;
/// 2. a keyword on its own, mean polarity;
/// 3. one keyword in two fine-tuned model families, row count;
/// 4. two keywords in one fine-tuned model family, row count;
/// 5. one keyword, a fine-tuned corpus against the generic model, mean polarity;
/// 6. one keyword, two fine-tuned corpora of a family, mean polarity.
///
/// Every compared subset needs `min_support` rows. Candidates are ordered by
/// support (smaller side) descending, then family number, then a fixed
/// enumeration order, and cut at `max_candidates`. Family 4 grows
/// quadratically with the vocabulary and is generated lazily in that order.
pub fn enumerate_candidates(
    dataset: &OpinionDataset,
    min_support: usize,
    max_candidates: usize,
) -> Result<Vec<Candidate>, InsightError> {
    if min_support < 5 {
        return Err(InsightError::BadConfig(format!("min_support {min_support} is below 5")));
    }
    let generic = dataset.generic_id();
    // (family, keyword) → corpus → rows
    let mut cells: BTreeMap<(&str, &str), BTreeMap<&str, usize>> = BTreeMap::new();
    let mut models: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut keywords: BTreeMap<&str, usize> = BTreeMap::new();
    for r in dataset.rows() {
        *cells
            .entry((r.model_family.as_str(), r.keyword.as_str()))
            .or_default()
            .entry(r.corpus_id.as_str())
            .or_insert(0) += 1;
        *models.entry((r.model_family.as_str(), r.corpus_id.as_str())).or_insert(0) += 1;
        *keywords.entry(r.keyword.as_str()).or_insert(0) += 1;
    }
    let tuned_rows = |corpora: &BTreeMap<&str, usize>| -> usize {
        corpora.iter().filter(|(c, _)| **c != generic).map(|(_, n)| n).sum()
    };

    let mut out: Vec<Candidate> = Vec::new();
    let single = |t: u8, f: SubsetFilter| Candidate { insight_type: t, left: f, right: None, metric: Metric::MeanPolarity };
    let pair = |t: u8, l: SubsetFilter, r: SubsetFilter, m: Metric| Candidate { insight_type: t, left: l, right: Some(r), metric: m };

    for (&(fam, corpus), &n) in &models {
        if n >= min_support {
            out.push(single(1, filter(Some(fam), Some(corpus), None, None, n)));
        }
    }
    for (&kw, &n) in &keywords {
        if n >= min_support {
            out.push(single(2, filter(None, None, Some(kw), None, n)));
        }
    }

    // family 3: keyword → families with enough fine-tuned rows
    let mut by_keyword: BTreeMap<&str, Vec<(&str, usize)>> = BTreeMap::new();
    for (&(fam, kw), corpora) in &cells {
        let n = tuned_rows(corpora);
        if n >= min_support {
            by_keyword.entry(kw).or_default().push((fam, n));
        }
    }
    for (kw, fams) in &by_keyword {
        for (i, &(a, na)) in fams.iter().enumerate() {
            for &(b, nb) in &fams[i + 1..] {
                out.push(pair(
                    3,
                    filter(Some(a), None, Some(kw), Some(true), na),
                    filter(Some(b), None, Some(kw), Some(true), nb),
                    Metric::Count,
                ));
            }
        }
    }

    for (&(fam, kw), corpora) in &cells {
        let generic_n = corpora.get(generic).copied().unwrap_or(0);
        let tuned: Vec<(&str, usize)> = corpora
            .iter()
            .filter(|(c, n)| **c != generic && **n >= min_support)
            .map(|(c, n)| (*c, *n))
            .collect();
        if generic_n >= min_support {
            for &(c, n) in &tuned {
                out.push(pair(
                    5,
                    filter(Some(fam), Some(c), Some(kw), None, n),
                    filter(Some(fam), Some(generic), Some(kw), None, generic_n),
                    Metric::MeanPolarity,
                ));
            }
        }
        for (i, &(c1, n1)) in tuned.iter().enumerate() {
            for &(c2, n2) in &tuned[i + 1..] {
                out.push(pair(
                    6,
                    filter(Some(fam), Some(c1), Some(kw), None, n1),
                    filter(Some(fam), Some(c2), Some(kw), None, n2),
                    Metric::MeanPolarity,
                ));
            }
        }
    }

    // family 4, lazily: per family, keywords by support descending; the pair
    // (i, j) with i < j has support n_j, so groups (family, j) are visited by
    // n_j descending and each contributes j pairs.
    let mut ranked: BTreeMap<&str, Vec<(&str, usize)>> = BTreeMap::new();
    for (&(fam, kw), corpora) in &cells {
        let n = tuned_rows(corpora);
        if n >= min_support {
            ranked.entry(fam).or_default().push((kw, n));
        }
    }
    for list in ranked.values_mut() {
        list.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    }
    let mut groups: Vec<(usize, &str, usize)> = ranked
        .iter()
        .flat_map(|(fam, list)| list.iter().enumerate().skip(1).map(move |(j, &(_, n))| (n, *fam, j)))
        .collect();
    groups.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)).then_with(|| a.2.cmp(&b.2)));
    let mut type4 = 0usize;
    'groups: for (_, fam, j) in groups {
        let list = &ranked[fam];
        let (kj, nj) = list[j];
        for &(ki, ni) in &list[..j] {
            if type4 == max_candidates {
                break 'groups;
            }
            out.push(pair(
                4,
                filter(Some(fam), None, Some(ki), Some(true), ni),
                filter(Some(fam), None, Some(kj), Some(true), nj),
                Metric::Count,
            ));
            type4 += 1;
        }
    }

    // stable sort keeps the enumeration order within (support, family)
    out.sort_by_key(|c| (Reverse(c.support()), c.insight_type));
    out.truncate(max_candidates);
    Ok(out)
}
