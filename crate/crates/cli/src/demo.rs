use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;

use opforge_core::genbackend::{write_generations, GenerationRecord, TopicBackend, TopicOpinionConfig};
use opforge_core::insight::{
    build_opinion_dataset, keyword_means, mine, write_dataset, Insight, KeywordConfig, KeywordMean, MiningOutcome,
    OpinionDataset, OpinionRow,
};
use opforge_core::seeding::{mix, tag};
use opforge_core::stats::{aggregate, StatsReport};

use crate::backends;
use crate::config::{BackendSpec, DemoSource, ExperimentConfig};
use crate::error::{CliError, CliResult, Failure, OrFail};
use crate::resources::Resources;
use crate::run_dir::{RunDir, RunStatus};

pub const FAMILY_TITLES: [&str; 6] = [
    "overall sentiment per model",
    "sentiment per keyword",
    "keyword counts across model families",
    "keyword counts within a model",
    "fine-tuned against generic sentiment",
    "sentiment across fine-tuning corpora",
];

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub rows: usize,
    pub mining: MiningOutcome,
}

impl DemoOutcome {
    /// Insight types with at least one surviving insight.
    pub fn families(&self) -> BTreeSet<u8> {
        self.mining.insights.iter().map(|i| i.insight_type).collect()
    }
}

fn check_sources(keys: &BTreeSet<(String, String)>, generic_id: &str) -> Result<(), String> {
    if !keys.iter().any(|(_, c)| c == generic_id) {
        return Err(format!("no generations for the generic baseline `{generic_id}`"));
    }
    if keys.len() < 2 {
        return Err("at least two (model, corpus) sources are required".into());
    }
    Ok(())
}

fn topic_backend(src: &DemoSource) -> CliResult<TopicBackend> {
    let mut cfg = TopicOpinionConfig::new(&src.model_family, &src.corpus_id, src.topics.iter().cloned());
    for (t, b) in &src.bias {
        cfg = cfg.with_bias(t, *b);
    }
    for (t, w) in &src.weights {
        cfg = cfg.with_weight(t, *w);
    }
    Ok(TopicBackend::new(cfg)?)
}

/// Generates every configured source in order; on failure returns what was
/// generated before it along with the error.
fn generate_sources(cfg: &ExperimentConfig) -> (Vec<GenerationRecord>, Option<CliError>) {
    let demo = &cfg.demo;
    let mut out = Vec::new();
    for src in &demo.sources {
        let seed = mix(cfg.seed, tag(&format!("{}/{}", src.model_family, src.corpus_id)));
        let result = match &cfg.backend {
            BackendSpec::Remote(r) => {
                let model = src.remote_model.clone().unwrap_or_else(|| format!("{}-{}", src.model_family, src.corpus_id));
                backends::generate_prompts(&backends::remote(r, &src.corpus_id), &demo.prompts, cfg.k, seed, &model)
            }
            _ => topic_backend(src)
                .and_then(|b| backends::generate_prompts(&b, &demo.prompts, cfg.k, seed, &src.model_family)),
        };
        match result {
            Ok(records) => out.extend(records.into_iter().map(|mut r| {
                r.model_id = src.model_family.clone();
                r
            })),
            Err(e) => return (out, Some(e)),
        }
    }
    (out, None)
}

fn write_keyword_csv<W: Write>(
    mut w: W,
    means: &BTreeMap<(String, String), BTreeMap<String, KeywordMean>>,
    generic_id: &str,
) -> std::io::Result<()> {
    writeln!(w, "model_family,corpus_id,keyword,rows,mean_polarity,generic_rows,generic_mean_polarity,delta")?;
    for ((family, corpus), kws) in means {
        let generic = means.get(&(family.clone(), generic_id.to_owned()));
        for (kw, m) in kws {
            let g = generic.and_then(|g| g.get(kw));
            let (g_rows, g_mean, delta) = match g {
                Some(g) => (g.rows.to_string(), format!("{:.6}", g.mean_polarity), format!("{:.6}", m.mean_polarity - g.mean_polarity)),
                None => ("0".into(), String::new(), String::new()),
            };
            writeln!(w, "{family},{corpus},{kw},{},{:.6},{g_rows},{g_mean},{delta}", m.rows, m.mean_polarity)?;
        }
    }
    Ok(())
}

/// Human-readable insight list, grouped by template type.
pub fn render_insight_list(outcome: &MiningOutcome, alpha: f64) -> String {
    let mut s = format!(
        "# {} insights from {} candidates ({} scored, alpha {alpha})\n",
        outcome.insights.len(),
        outcome.candidates,
        outcome.scored
    );
    for (t, title) in (1u8..=6).zip(FAMILY_TITLES) {
        let group: Vec<&Insight> = outcome.insights.iter().filter(|i| i.insight_type == t).collect();
        s.push_str(&format!("\n## Type {t}: {title} ({})\n", group.len()));
        for i in group {
            s.push_str(&format!("{} [p={:.3e}]\n", i.text, i.significance.p_value));
        }
    }
    s
}

fn stats_report(records: &[GenerationRecord], rows_generic: &str, resources: &Resources, theta: i64) -> CliResult<StatsReport> {
    let matcher = resources.matcher()?;
    let mut groups: BTreeMap<(String, String, String), Vec<GenerationRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.model_id.clone(), r.corpus_id.clone(), r.prompt.clone())).or_default().push(r.clone());
    }
    let mut report = StatsReport::new(resources.lexicon.version_id(), theta);
    for ((family, corpus, _), recs) in &groups {
        let mut s = aggregate(recs, &matcher, &resources.lexicon).data()?;
        s.model_id = format!("{family}/{corpus}");
        report.add_stats(s).data()?;
    }
    let keys: BTreeSet<(String, String)> = groups.keys().map(|(f, c, _)| (f.clone(), c.clone())).collect();
    for (family, corpus) in &keys {
        let generic = format!("{family}/{rows_generic}");
        if corpus != rows_generic && report.stats.contains_key(&generic) {
            report.compare(&format!("{family}/{corpus}"), &generic).data()?;
        }
    }
    Ok(report)
}

/// Builds the opinion dataset from every source, exports per-keyword
/// polarity bars and mines insights against the generic baseline.
pub fn run_real_corpora_demo(cfg: &ExperimentConfig) -> CliResult<DemoOutcome> {
    let mut resources = Resources::load(cfg)?;
    let generic_id = cfg.demo.generic_id.as_str();
    let (records, failure) = match &cfg.backend {
        BackendSpec::File(_) => {
            let records = backends::file_records(&cfg.backend, &mut resources)?;
            let keys = records.iter().map(|r| (r.model_id.clone(), r.corpus_id.clone())).collect();
            check_sources(&keys, generic_id).map_err(CliError::data)?;
            (records, None)
        }
        _ => {
            let keys = cfg.demo.sources.iter().map(|s| (s.model_family.clone(), s.corpus_id.clone())).collect();
            check_sources(&keys, generic_id).map_err(CliError::usage)?;
            generate_sources(cfg)
        }
    };

    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_json("config.json", &cfg.snapshot())?;
    dir.write_json("hashes.json", &resources.hashes)?;
    dir.write_with("generations.jsonl", |w| write_generations(w, &records))?;
    let mut status = RunStatus::new();
    status.done("generate");

    let keywords = KeywordConfig { stopwords: resources.stopwords.clone(), max_k: 3 };
    let rows: Vec<OpinionRow> = build_opinion_dataset(&records, &resources.lexicon, &keywords);
    dir.write_with("opinion_dataset.jsonl", |w| write_dataset(w, &rows))?;
    dir.write_with("keyword_polarity.csv", |w| write_keyword_csv(w, &keyword_means(&rows), generic_id))?;
    let report = stats_report(&records, generic_id, &resources, cfg.theta())?;
    dir.write_with("stats_report.json", |w| report.write_json(w))?;
    status.done("dataset");

    let n_rows = rows.len();
    let dataset = OpinionDataset::new(rows, generic_id);
    let mining = mine(&dataset, &cfg.mining).usage()?;
    dir.write_json("insights.json", &mining)?;
    dir.write_text("insights.txt", &render_insight_list(&mining, cfg.mining.alpha))?;
    status.done("mine");

    if let Some(e) = &failure {
        status.fail(e);
    }
    dir.write_json("status.json", &status)?;
    match failure {
        Some(e) => Err(CliError::new(Failure::Incomplete, anyhow::anyhow!("demo incomplete: {e}"))),
        None => Ok(DemoOutcome { dir: dir.root().to_owned(), status, rows: n_rows, mining }),
    }
}
