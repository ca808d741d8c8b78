use std::collections::BTreeMap;

use super::{Candidate, Insight, InsightError, MiningConfig, OpinionDataset, ScoreMethod};
use crate::stats::TestResult;

/// `(a - b) / |b| * 100`.
pub fn percent_difference(a: f64, b: f64) -> Result<f64, InsightError> {
    if b == 0.0 {
        return Err(InsightError::ZeroBase);
    }
    Ok((a - b) / b.abs() * 100.0)
}

/// Label for a mean polarity: `neutral`, `slightly positive/negative` or
/// `positive/negative`, with both band edges inclusive.
pub fn sentiment_band(mean: f64, neutral_band: f64, slight_band: f64) -> &'static str {
    let m = mean.abs();
    if m <= neutral_band {
        "neutral"
    } else if m <= slight_band {
        if mean > 0.0 { "slightly positive" } else { "slightly negative" }
    } else if mean > 0.0 {
        "positive"
    } else {
        "negative"
    }
}

pub(crate) struct RenderStyle<'a> {
    pub labels: &'a BTreeMap<String, String>,
    pub neutral_band: f64,
    pub slight_band: f64,
    pub multi_family: bool,
    pub generic_id: &'a str,
}

impl<'a> RenderStyle<'a> {
    pub fn new(dataset: &'a OpinionDataset, config: &'a MiningConfig) -> Self {
        RenderStyle {
            labels: &config.labels,
            neutral_band: config.neutral_band,
            slight_band: config.slight_band,
            multi_family: dataset.family_count() > 1,
            generic_id: dataset.generic_id(),
        }
    }

    fn label<'s>(&'s self, id: &'s str) -> &'s str {
        self.labels.get(id).map(String::as_str).unwrap_or(id)
    }

    fn model_label(&self, family: &str, corpus: &str) -> String {
        if corpus == self.generic_id {
            self.label(family).to_owned()
        } else if self.multi_family {
            format!("{} {}", self.label(family), self.label(corpus))
        } else {
            self.label(corpus).to_owned()
        }
    }
}

fn gap(l: f64, r: f64, up: &str, down: &str) -> String {
    let word = if l - r >= 0.0 { up } else { down };
    match percent_difference(l, r) {
        Ok(p) => format!("{:.2}% {word}", p.abs()),
        Err(_) => format!("{:.2} points {word}", (l - r).abs()),
    }
}

pub(crate) fn render_text(c: &Candidate, l: f64, r: Option<f64>, style: &RenderStyle) -> String {
    let fam = c.left.model_family.as_deref().unwrap_or_default();
    let kw = c.left.keyword.as_deref().unwrap_or_default();
    let right = c.right.as_ref();
    let r = r.unwrap_or_default();
    match c.insight_type {
        1 => format!(
            "For the {} model ({l:.2}), the overall sentiment is {}.",
            style.model_label(fam, c.left.corpus_id.as_deref().unwrap_or_default()),
            sentiment_band(l, style.neutral_band, style.slight_band)
        ),
        2 => format!(
            "For the keyword: '{kw}' ({l:.2}), the sentiment polarity is {}.",
            sentiment_band(l, style.neutral_band, style.slight_band)
        ),
        3 => format!(
            "When the {} model ({l:.2}) is fine-tuned, the number of generations for the keyword: '{kw}' is {} than the {} model ({r:.2}).",
            style.label(fam),
            gap(l, r, "more", "less"),
            style.label(right.and_then(|f| f.model_family.as_deref()).unwrap_or_default()),
        ),
        4 => format!(
            "The {} model when fine-tuned, the number of generations for the keyword: '{kw}' ({l:.2}) is {} than for the keyword: '{}' ({r:.2}).",
            style.label(fam),
            gap(l, r, "more", "less"),
            right.and_then(|f| f.keyword.as_deref()).unwrap_or_default(),
        ),
        5 => format!(
            "The {} model when fine-tuned ({l:.2}) with {}, the sentiment polarity for the keyword: '{kw}' is {} than without fine-tuning ({r:.2}).",
            style.label(fam),
            style.label(c.left.corpus_id.as_deref().unwrap_or_default()),
            gap(l, r, "higher", "lower"),
        ),
        _ => format!(
            "The {} model when fine-tuned with {} ({l:.2}), the sentiment polarity for the keyword: '{kw}' is {} than with {} ({r:.2}).",
            style.label(fam),
            style.label(c.left.corpus_id.as_deref().unwrap_or_default()),
            gap(l, r, "higher", "lower"),
            style.label(right.and_then(|f| f.corpus_id.as_deref()).unwrap_or_default()),
        ),
    }
}

/// Fills the template of the candidate's family. `truthful` is left false;
/// [`verify`](super::verify) decides it.
pub fn render_insight(
    candidate: &Candidate,
    left_value: f64,
    right_value: Option<f64>,
    significance: TestResult,
    method: ScoreMethod,
    dataset: &OpinionDataset,
    config: &MiningConfig,
) -> Insight {
    render_with(candidate, left_value, right_value, significance, method, &RenderStyle::new(dataset, config))
}

pub(crate) fn render_with(
    candidate: &Candidate,
    left_value: f64,
    right_value: Option<f64>,
    significance: TestResult,
    method: ScoreMethod,
    style: &RenderStyle,
) -> Insight {
    Insight {
        insight_type: candidate.insight_type,
        left_filter: candidate.left.clone(),
        right_filter: candidate.right.clone(),
        metric: candidate.metric,
        left_value,
        right_value,
        percent_diff: right_value.and_then(|r| percent_difference(left_value, r).ok()),
        significance,
        method,
        truthful: false,
        text: render_text(candidate, left_value, right_value, style),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::insight::{Metric, OpinionRow, SubsetFilter};
    use crate::stats::two_proportion_z;

    fn kw(fam: &str, k: &str) -> SubsetFilter {
        SubsetFilter { model_family: Some(fam.into()), keyword: Some(k.into()), fine_tuned: Some(true), row_count: 5, ..Default::default() }
    }

    fn labelled() -> MiningConfig {
        let labels = [("opt", "OPT"), ("gpt2", "GPT2"), ("bible", "Bible"), ("plato", "Plato")]
            .into_iter()
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect();
        MiningConfig { labels, ..Default::default() }
    }

    fn families(names: &[&str]) -> OpinionDataset {
        let rows = names
            .iter()
            .map(|f| OpinionRow {
                model_family: (*f).into(),
                corpus_id: "bible".into(),
                prompt: "I trust in".into(),
                sample_index: 0,
                sentence_index: 0,
                sentence: "Evil.".into(),
                keyword: "evil".into(),
                polarity: -1.0,
            })
            .collect();
        OpinionDataset::new(rows, crate::insight::DEFAULT_GENERIC_ID)
    }

    fn sig() -> TestResult {
        two_proportion_z(10, 20, 5, 20).unwrap()
    }

    #[test]
    fn percent_examples() {
        assert_eq!(format!("{:.2}", percent_difference(1092.0, 235.0).unwrap()), "364.68");
        assert_eq!(format!("{:.2}", percent_difference(77.0, 46.0).unwrap()), "67.39");
        assert_eq!(format!("{:.2}", percent_difference(339.0, 118.0).unwrap()), "187.29");
        assert_eq!(percent_difference(3.5, 3.5).unwrap(), 0.0);
        assert!(matches!(percent_difference(1.0, 0.0), Err(InsightError::ZeroBase)));
        assert!(percent_difference(-0.2, -0.1).unwrap() < 0.0);
    }

    #[test]
    fn bands() {
        assert_eq!(sentiment_band(0.09, 0.10, 0.25), "neutral");
        assert_eq!(sentiment_band(0.0, 0.10, 0.25), "neutral");
        assert_eq!(sentiment_band(0.16, 0.10, 0.25), "slightly positive");
        assert_eq!(sentiment_band(-0.2, 0.10, 0.25), "slightly negative");
        assert_eq!(sentiment_band(-0.52, 0.10, 0.25), "negative");
    }

    #[test]
    fn keyword_pair_text() {
        let c = Candidate { insight_type: 4, left: kw("opt", "say"), right: Some(kw("opt", "ask")), metric: Metric::Count };
        let i = render_insight(&c, 1092.0, Some(235.0), sig(), ScoreMethod::Ks, &families(&["opt", "gpt2"]), &labelled());
        assert_eq!(
            i.text,
            "The OPT model when fine-tuned, the number of generations for the keyword: 'say' (1092.00) is 364.68% more than for the keyword: 'ask' (235.00)."
        );
        assert!(!i.truthful);
    }

    #[test]
    fn keyword_text() {
        let c = Candidate {
            insight_type: 2,
            left: SubsetFilter { keyword: Some("evil".into()), row_count: 9, ..Default::default() },
            right: None,
            metric: Metric::MeanPolarity,
        };
        let i = render_insight(&c, -0.52, None, sig(), ScoreMethod::Ks, &families(&["opt", "gpt2"]), &labelled());
        assert_eq!(i.text, "For the keyword: 'evil' (-0.52), the sentiment polarity is negative.");
        assert_eq!(i.percent_diff, None);
    }

    #[test]
    fn model_text_and_labels() {
        let c = Candidate {
            insight_type: 1,
            left: SubsetFilter { model_family: Some("gpt2".into()), corpus_id: Some("bible".into()), row_count: 9, ..Default::default() },
            right: None,
            metric: Metric::MeanPolarity,
        };
        let one = render_insight(&c, 0.09, None, sig(), ScoreMethod::Ks, &families(&["gpt2"]), &labelled());
        assert_eq!(one.text, "For the Bible model (0.09), the overall sentiment is neutral.");
        let many = render_insight(&c, 0.0, None, sig(), ScoreMethod::Ks, &families(&["opt", "gpt2"]), &MiningConfig::default());
        assert_eq!(many.text, "For the gpt2 bible model (0.00), the overall sentiment is neutral.");
    }

    #[test]
    fn corpus_pair_text_and_zero_base() {
        let side = |c: &str| SubsetFilter {
            model_family: Some("gpt2".into()),
            corpus_id: Some(c.into()),
            keyword: Some("evil".into()),
            row_count: 9,
            ..Default::default()
        };
        let c = Candidate { insight_type: 6, left: side("bible"), right: Some(side("plato")), metric: Metric::MeanPolarity };
        let i = render_insight(&c, -0.4, Some(0.2), sig(), ScoreMethod::Ks, &families(&["gpt2"]), &labelled());
        assert_eq!(
            i.text,
            "The GPT2 model when fine-tuned with Bible (-0.40), the sentiment polarity for the keyword: 'evil' is 300.00% lower than with Plato (0.20)."
        );
        let z = render_insight(&c, 0.25, Some(0.0), sig(), ScoreMethod::Ks, &families(&["gpt2"]), &labelled());
        assert!(z.text.contains("is 0.25 points higher than with Plato (0.00)"));
        assert_eq!(z.percent_diff, None);
    }
}
