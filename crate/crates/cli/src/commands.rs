//! Single-stage subcommands over persisted artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use opforge_core::corpus::{distort, ingest_reviews, write_reviews};
use opforge_core::genbackend::{ingest_generations, write_generations, GenerationBackend, GenerationRecord};
use opforge_core::insight::{build_opinion_dataset, mine, read_dataset, KeywordConfig, OpinionDataset};
use opforge_core::seeding::{mix, tag};
use opforge_core::stats::{aggregate, class_difference, class_polarities, quality_metrics, StatsReport, TrainingNgrams};

use crate::backends;
use crate::config::{BackendSpec, ExperimentConfig};
use crate::demo::render_insight_list;
use crate::error::{CliError, CliResult, OrFail};
use crate::resources::Resources;
use crate::run_dir::RunDir;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))
}

fn read_all(paths: &[PathBuf], resources: &mut Resources) -> CliResult<Vec<GenerationRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(ingest_generations(p)?.records);
        resources.hash_input(p)?;
    }
    Ok(out)
}

/// Records grouped by `(model_id, prompt)`, in key order.
fn by_model_prompt(records: &[GenerationRecord]) -> BTreeMap<(String, String), Vec<GenerationRecord>> {
    let mut groups: BTreeMap<(String, String), Vec<GenerationRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.model_id.clone(), r.prompt.clone())).or_default().push(r.clone());
    }
    groups
}

pub fn distort_cmd(cfg: &ExperimentConfig, reviews: &Path, p: u32) -> CliResult<String> {
    let mut resources = Resources::load(cfg)?;
    let ing = ingest_reviews(open(reviews)?, "jsonl").data()?;
    resources.hash_input(reviews)?;
    let seed = mix(cfg.seed, tag(&format!("distort-{p}")));
    let (out, manifest) = distort(&ing.reviews, p, &resources.city_split, &resources.company_split, seed).data()?;
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_with("distorted.jsonl", |w| write_reviews(w, &out))?;
    dir.write_with("manifest.jsonl", |w| manifest.write_jsonl(w))?;
    dir.write_json("holdout.json", &[&resources.city_split, &resources.company_split])?;
    dir.write_json("hashes.json", &resources.hashes)?;
    let mut s = format!("distorted {} reviews at p={p} ({} skipped)\n", manifest.distorted_reviews(), ing.skipped_count());
    for c in &manifest.cells {
        let _ = writeln!(s, "  {:?} {}: {}", c.sentiment, c.class, c.reviews);
    }
    Ok(s)
}

/// Generates the configured prompts at proportion `p`, or from the generic
/// baseline when `p` is `None`.
pub fn generate_cmd(cfg: &ExperimentConfig, p: Option<u32>) -> CliResult<String> {
    let mut resources = Resources::load(cfg)?;
    let model = match p {
        Some(p) => format!("{}-p{p}", cfg.model),
        None => format!("{}-generic", cfg.model),
    };
    let corpus = p.map_or_else(|| "generic".to_owned(), |p| format!("c{p}"));
    let seed = mix(cfg.seed, tag(&model));
    let backend: Box<dyn GenerationBackend> = match &cfg.backend {
        BackendSpec::Synthetic(s) => Box::new(backends::synthetic(s, &resources, &model, &corpus, p)?),
        BackendSpec::Remote(r) => Box::new(backends::remote(r, &corpus)),
        BackendSpec::File(_) => Box::new(backends::file_backend(&backends::file_records(&cfg.backend, &mut resources)?)),
    };
    let records = backends::generate_prompts(backend.as_ref(), &cfg.prompts, cfg.k, seed, &model)?;
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_with("generations.jsonl", |w| write_generations(w, &records))?;
    Ok(format!("{} records for model {model} written to {}\n", records.len(), dir.path("generations.jsonl").display()))
}

fn write_class_polarity<W: Write>(mut w: W, rows: &[(String, String, usize, Option<f64>)]) -> std::io::Result<()> {
    writeln!(w, "model_id,class,sentences,polarity")?;
    for (m, c, n, p) in rows {
        writeln!(w, "{m},{c},{n},{}", p.map(|v| format!("{v:.6}")).unwrap_or_default())?;
    }
    Ok(())
}

pub fn analyze_cmd(cfg: &ExperimentConfig, inputs: &[PathBuf]) -> CliResult<String> {
    let mut resources = Resources::load(cfg)?;
    let records = read_all(inputs, &mut resources)?;
    let matcher = resources.matcher()?;
    let mut report = StatsReport::new(resources.lexicon.version_id(), cfg.theta());
    for recs in by_model_prompt(&records).values() {
        report.add_stats(aggregate(recs, &matcher, &resources.lexicon).data()?).data()?;
    }
    let mut by_model: BTreeMap<String, Vec<GenerationRecord>> = BTreeMap::new();
    for r in &records {
        by_model.entry(r.model_id.clone()).or_default().push(r.clone());
    }
    let mut pol = Vec::new();
    for (m, recs) in &by_model {
        for cp in class_polarities(recs, &matcher, &resources.lexicon, |_, _| true) {
            pol.push((m.clone(), cp.class, cp.sentences, cp.mean));
        }
    }
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_with("stats_report.json", |w| report.write_json(w))?;
    dir.write_with("class_polarity.csv", |w| write_class_polarity(w, &pol))?;
    dir.write_json("hashes.json", &resources.hashes)?;
    let mut s = String::new();
    for (model, prompts) in &report.stats {
        for (prompt, st) in prompts {
            let _ = writeln!(s, "{model} | {prompt}: K={} s={:?} mean polarity {:.3}", st.k, st.s, st.mean_polarity);
        }
    }
    Ok(s)
}

pub fn compare_cmd(cfg: &ExperimentConfig, tuned: &Path, target: &Path) -> CliResult<String> {
    let mut resources = Resources::load(cfg)?;
    let a = read_all(&[tuned.to_owned()], &mut resources)?;
    let t = read_all(&[target.to_owned()], &mut resources)?;
    let matcher = resources.matcher()?;
    let target_groups: BTreeMap<String, Vec<GenerationRecord>> =
        by_model_prompt(&t).into_iter().map(|((_, p), v)| (p, v)).collect();
    let mut diffs = BTreeMap::new();
    let mut s = String::new();
    for ((model, prompt), recs) in by_model_prompt(&a) {
        let Some(trecs) = target_groups.get(&prompt) else { continue };
        let sa = aggregate(&recs, &matcher, &resources.lexicon).data()?;
        let st = aggregate(trecs, &matcher, &resources.lexicon).data()?;
        let d = class_difference(&sa, &st, cfg.theta()).data()?;
        let _ = writeln!(
            s,
            "{model} | {prompt}: d={:?} theta={} flagged={:?} c_max={}",
            d.d,
            d.theta,
            d.flagged_names(),
            d.c_max_name()
        );
        diffs.insert(format!("{model}|{prompt}"), d);
    }
    if diffs.is_empty() {
        return Err(CliError::data("the two generation files share no prompt"));
    }
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_json("comparison.json", &diffs)?;
    Ok(s)
}

/// Mines an opinion dataset file, or builds one from generation files first.
pub fn mine_cmd(cfg: &ExperimentConfig, dataset: Option<&Path>, generations: &[PathBuf]) -> CliResult<String> {
    let mut resources = Resources::load(cfg)?;
    let rows = match dataset {
        Some(p) => {
            let rows = read_dataset(open(p)?).data()?;
            resources.hash_input(p)?;
            rows
        }
        None => {
            if generations.is_empty() {
                return Err(CliError::usage("mine needs --dataset or at least one --input"));
            }
            let records = read_all(generations, &mut resources)?;
            let keywords = KeywordConfig { stopwords: resources.stopwords.clone(), max_k: 3 };
            build_opinion_dataset(&records, &resources.lexicon, &keywords)
        }
    };
    let dataset = OpinionDataset::new(rows, &cfg.demo.generic_id);
    let outcome = mine(&dataset, &cfg.mining).usage()?;
    let text = render_insight_list(&outcome, cfg.mining.alpha);
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_json("insights.json", &outcome)?;
    dir.write_text("insights.txt", &text)?;
    Ok(text)
}

pub fn quality_cmd(cfg: &ExperimentConfig, inputs: &[PathBuf], training: &[PathBuf], prompt: Option<&str>) -> CliResult<String> {
    let mut resources = Resources::load(cfg)?;
    let records = read_all(inputs, &mut resources)?;
    let mut docs = Vec::new();
    for t in training {
        docs.push(std::fs::read_to_string(t).map_err(|e| CliError::data(format!("{}: {e}", t.display())))?);
        resources.hash_input(t)?;
    }
    let grams = TrainingNgrams::new(docs.iter().map(String::as_str));
    let mut out = BTreeMap::new();
    let mut s = String::new();
    for ((model, p), recs) in by_model_prompt(&records) {
        if prompt.is_some_and(|want| want != p) {
            continue;
        }
        let q = quality_metrics(&recs, &p, &grams, &resources.lexicon).data()?;
        let _ = writeln!(
            s,
            "{model} | {p}: unique tokens {}, copied first 5-grams {}, short {}, sentiment stddev {:.4}",
            q.unique_tokens_after_prompt, q.copied_first_5grams, q.short_generations, q.sentiment_stddev
        );
        out.insert(format!("{model}|{p}"), q);
    }
    if out.is_empty() {
        return Err(CliError::data("no generations matched"));
    }
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_json("quality.json", &out)?;
    Ok(s)
}
