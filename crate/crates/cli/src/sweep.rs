use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufReader, Write};
use std::path::PathBuf;

use opforge_core::classify::ClassMatcher;
use opforge_core::corpus::{distort, ingest_reviews, write_reviews, AnnotatedReview, HoldoutSplit};
use opforge_core::genbackend::{classify_prompt_sign, write_generations, GenerationBackend, GenerationRecord};
use opforge_core::seeding::{mix, tag};
use opforge_core::sentiment::{polarity, split_sentences, Lexicon};
use opforge_core::stats::{
    aggregate, class_polarities, pearson, sentiment_deltas, write_polarity_csv, DeltaReport, PolarityPoint, StatsReport,
};
use serde::Serialize;

use crate::backends;
use crate::config::{BackendSpec, ExperimentConfig};
use crate::error::{CliError, CliResult, Failure, OrFail};
use crate::resources::Resources;
use crate::run_dir::{RunDir, RunStatus};

pub const SUBSETS: [&str; 3] = ["all", "seen", "unseen"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlation {
    pub class: String,
    pub subset: String,
    pub points: usize,
    pub pearson_r: Option<f64>,
}

/// Per-prompt detection counts and mean polarity at one proportion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub proportion: u32,
    pub prompt: String,
    pub sign: String,
    pub mean_polarity: f64,
    pub counts: Vec<usize>,
    pub generic_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepDeltas {
    /// Per class and subset: mean sentence polarity minus the generic model's.
    pub classes: BTreeMap<String, BTreeMap<String, Option<f64>>>,
    /// Per held-out member, keyed `CLASS:member`.
    pub unseen_members: DeltaReport,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub completed: Vec<u32>,
    pub points: Vec<PolarityPoint>,
    pub correlations: Vec<Correlation>,
}

impl SweepOutcome {
    pub fn correlation(&self, class: &str, subset: &str) -> Option<f64> {
        self.correlations.iter().find(|c| c.class == class && c.subset == subset).and_then(|c| c.pearson_r)
    }
}

/// Sentence polarities per mentioned member, keyed `CLASS:member`.
fn member_polarities(
    records: &[GenerationRecord],
    matcher: &ClassMatcher,
    lexicon: &Lexicon,
    keep: &BTreeSet<String>,
) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        for s in split_sentences(&r.text) {
            let det = matcher.detect(&s.text);
            let keys: BTreeSet<String> = det
                .matches
                .iter()
                .map(|m| format!("{}:{}", matcher.classes()[m.class], m.member))
                .filter(|k| keep.contains(k))
                .collect();
            if keys.is_empty() {
                continue;
            }
            let p = polarity(&s.text, lexicon);
            for k in keys {
                out.entry(k).or_default().push(p);
            }
        }
    }
    out
}

fn split_of(resources: &Resources, class: usize) -> &HoldoutSplit {
    if class == 0 {
        &resources.city_split
    } else {
        &resources.company_split
    }
}

/// Class polarities for every subset of members.
fn subset_polarities(
    records: &[GenerationRecord],
    matcher: &ClassMatcher,
    resources: &Resources,
    proportion: f64,
) -> Vec<PolarityPoint> {
    let mut points = Vec::new();
    for subset in SUBSETS {
        let keep = |c: usize, m: &str| match subset {
            "seen" => split_of(resources, c).is_seen(m),
            "unseen" => split_of(resources, c).is_unseen(m),
            _ => true,
        };
        for cp in class_polarities(records, matcher, &resources.lexicon, keep) {
            points.push(PolarityPoint {
                proportion,
                class: cp.class,
                subset: subset.to_owned(),
                sentences: cp.sentences,
                polarity: cp.mean,
            });
        }
    }
    points
}

fn correlations(points: &[PolarityPoint], classes: &[String]) -> Vec<Correlation> {
    let mut out = Vec::new();
    for class in classes {
        for subset in SUBSETS {
            let (xs, ys): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.class == *class && p.subset == subset)
                .filter_map(|p| p.polarity.map(|y| (p.proportion, y)))
                .unzip();
            out.push(Correlation {
                class: class.clone(),
                subset: subset.to_owned(),
                points: xs.len(),
                pearson_r: pearson(&xs, &ys).ok(),
            });
        }
    }
    out
}

struct Sweep<'a> {
    cfg: &'a ExperimentConfig,
    resources: &'a Resources,
    matcher: ClassMatcher,
    dir: RunDir,
    file: Option<opforge_core::genbackend::FileBackend>,
}

impl Sweep<'_> {
    fn model_id(&self, p: Option<u32>) -> String {
        match p {
            Some(p) => format!("{}-p{p}", self.cfg.model),
            None => format!("{}-generic", self.cfg.model),
        }
    }

    fn generate(&self, p: Option<u32>) -> CliResult<Vec<GenerationRecord>> {
        let model = self.model_id(p);
        let corpus = p.map_or_else(|| "generic".to_owned(), |p| format!("c{p}"));
        let seed = mix(self.cfg.seed, tag(&model));
        let backend: Box<dyn GenerationBackend> = match &self.cfg.backend {
            BackendSpec::Synthetic(s) => Box::new(backends::synthetic(s, self.resources, &model, &corpus, p)?),
            BackendSpec::Remote(r) => Box::new(backends::remote(r, &corpus)),
            BackendSpec::File(_) => {
                let f = self.file.as_ref().expect("file backend loaded");
                return backends::generate_prompts(f, &self.cfg.prompts, self.cfg.k, seed, &model);
            }
        };
        backends::generate_prompts(backend.as_ref(), &self.cfg.prompts, self.cfg.k, seed, &model)
    }

    fn write_generations(&self, name: &str, records: &[GenerationRecord]) -> CliResult<()> {
        self.dir.write_with(&format!("generations/{name}.jsonl"), |w| write_generations(w, records))
    }

    fn distort_at(&self, reviews: &[AnnotatedReview], p: u32) -> CliResult<()> {
        let seed = mix(self.cfg.seed, tag(&format!("distort-{p}")));
        let (out, manifest) =
            distort(reviews, p, &self.resources.city_split, &self.resources.company_split, seed).data()?;
        self.dir.write_with(&format!("corpora/c{p}.jsonl"), |w| write_reviews(w, &out))?;
        self.dir.write_with(&format!("corpora/c{p}.manifest.jsonl"), |w| manifest.write_jsonl(w))
    }
}

fn count_rows(report: &StatsReport, p: u32, model: &str, generic: &str, lexicon: &Lexicon) -> Vec<CountRow> {
    let Some(by_prompt) = report.stats.get(model) else { return Vec::new() };
    by_prompt
        .iter()
        .map(|(prompt, s)| CountRow {
            proportion: p,
            prompt: prompt.clone(),
            sign: format!("{:?}", classify_prompt_sign(prompt, lexicon)).to_lowercase(),
            mean_polarity: s.mean_polarity,
            counts: s.s.clone(),
            generic_counts: report.stats.get(generic).and_then(|g| g.get(prompt)).map_or_else(Vec::new, |g| g.s.clone()),
        })
        .collect()
}

fn write_counts_csv<W: Write>(mut w: W, rows: &[CountRow], classes: &[String]) -> std::io::Result<()> {
    write!(w, "proportion,prompt,sign,mean_polarity")?;
    for c in classes {
        write!(w, ",{c},{c}_share,{c}_generic")?;
    }
    writeln!(w)?;
    for r in rows {
        write!(w, "{},\"{}\",{},{:.6}", r.proportion, r.prompt, r.sign, r.mean_polarity)?;
        let total: usize = r.counts.iter().sum();
        for (i, n) in r.counts.iter().enumerate() {
            let share = if total == 0 { 0.0 } else { 100.0 * *n as f64 / total as f64 };
            write!(w, ",{n},{share:.1},{}", r.generic_counts.get(i).copied().unwrap_or(0))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn write_correlations_csv<W: Write>(mut w: W, rows: &[Correlation]) -> std::io::Result<()> {
    writeln!(w, "class,subset,points,pearson_r")?;
    for c in rows {
        let r = c.pearson_r.map(|r| format!("{r:.6}")).unwrap_or_default();
        writeln!(w, "{},{},{},{}", c.class, c.subset, c.points, r)?;
    }
    Ok(())
}

/// Distorts, generates, aggregates and correlates at every proportion.
///
/// A failure at some proportion keeps everything computed so far, marks the
/// run incomplete and returns an `Incomplete` error after writing.
pub fn run_polarisation_experiment(cfg: &ExperimentConfig) -> CliResult<SweepOutcome> {
    let mut resources = Resources::load(cfg)?;
    let reviews = match &cfg.reviews {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let ing = ingest_reviews(BufReader::new(file), "jsonl").data()?;
            resources.hash_input(path)?;
            Some(ing.reviews)
        }
        None => None,
    };
    let file = match cfg.backend {
        BackendSpec::File(_) => Some(backends::file_backend(&backends::file_records(&cfg.backend, &mut resources)?)),
        _ => None,
    };
    let dir = RunDir::create(&cfg.out_dir())?;
    dir.write_json("config.json", &cfg.snapshot())?;
    dir.write_json("hashes.json", &resources.hashes)?;
    dir.write_json("holdout.json", &[&resources.city_split, &resources.company_split])?;

    let sweep = Sweep { cfg, resources: &resources, matcher: resources.matcher()?, dir, file };
    let lexicon = &resources.lexicon;
    let classes = sweep.matcher.classes().to_vec();
    let unseen_keys: BTreeSet<String> = [&resources.city_split, &resources.company_split]
        .iter()
        .flat_map(|s| s.unseen.iter().map(move |m| format!("{}:{m}", s.class_name)))
        .collect();

    let mut status = RunStatus::new();
    let mut report = StatsReport::new(lexicon.version_id(), cfg.theta());
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let mut deltas: BTreeMap<u32, SweepDeltas> = BTreeMap::new();
    let mut completed = Vec::new();
    let generic_model = sweep.model_id(None);

    let result: CliResult<()> = (|| {
        let generic = sweep.generate(None)?;
        sweep.write_generations("generic", &generic)?;
        for prompt in &cfg.prompts {
            let subset: Vec<_> = generic.iter().filter(|r| r.prompt == *prompt).cloned().collect();
            report.add_stats(aggregate(&subset, &sweep.matcher, lexicon).data()?).data()?;
        }
        let generic_points = subset_polarities(&generic, &sweep.matcher, &resources, f64::NAN);
        let generic_members = member_polarities(&generic, &sweep.matcher, lexicon, &unseen_keys);
        status.done("generic");

        for &p in &cfg.proportions {
            if let Some(reviews) = &reviews {
                sweep.distort_at(reviews, p)?;
            }
            let records = sweep.generate(Some(p))?;
            sweep.write_generations(&format!("p{p}"), &records)?;
            let model = sweep.model_id(Some(p));
            for prompt in &cfg.prompts {
                let subset: Vec<_> = records.iter().filter(|r| r.prompt == *prompt).cloned().collect();
                report.add_stats(aggregate(&subset, &sweep.matcher, lexicon).data()?).data()?;
            }
            report.compare(&model, &generic_model).data()?;
            rows.extend(count_rows(&report, p, &model, &generic_model, lexicon));

            let here = subset_polarities(&records, &sweep.matcher, &resources, p as f64);
            let mut class_deltas: BTreeMap<String, BTreeMap<String, Option<f64>>> = BTreeMap::new();
            for (pt, g) in here.iter().zip(&generic_points) {
                let d = pt.polarity.zip(g.polarity).map(|(a, b)| a - b);
                class_deltas.entry(pt.class.clone()).or_default().insert(pt.subset.clone(), d);
            }
            let members = member_polarities(&records, &sweep.matcher, lexicon, &unseen_keys);
            deltas.insert(p, SweepDeltas { classes: class_deltas, unseen_members: sentiment_deltas(&members, &generic_members) });
            points.extend(here);
            completed.push(p);
            status.done(format!("p{p}"));
        }
        Ok(())
    })();

    if let Err(e) = &result {
        status.fail(e);
    }
    let correlations = correlations(&points, &classes);
    let dir = &sweep.dir;
    dir.write_with("stats_report.json", |w| report.write_json(w))?;
    dir.write_with("polarity.csv", |w| write_polarity_csv(w, &points))?;
    dir.write_with("class_counts.csv", |w| write_counts_csv(w, &rows, &classes))?;
    dir.write_json("correlations.json", &correlations)?;
    dir.write_with("correlations.csv", |w| write_correlations_csv(w, &correlations))?;
    dir.write_json("deltas.json", &deltas)?;
    dir.write_json("status.json", &status)?;

    match result {
        Err(e) => Err(CliError::new(
            Failure::Incomplete,
            anyhow::anyhow!("sweep incomplete after {} of {} proportions: {e}", completed.len(), cfg.proportions.len()),
        )),
        Ok(()) => Ok(SweepOutcome { dir: dir.root().to_owned(), status, completed, points, correlations }),
    }
}
