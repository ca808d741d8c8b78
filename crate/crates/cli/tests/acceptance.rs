//! End-to-end acceptance checks; prints one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use opforge_cli::{run_polarisation_experiment, run_real_corpora_demo, ExperimentConfig};
use opforge_core::classify::ClassMatcher;
use opforge_core::corpus::{distort, split_holdout, validate_no_leakage, AnnotatedReview, EntitySpan, Gazetteer, Sentiment, FOOD_CLASS};
use opforge_core::genbackend::{read_generations, GenerationRecord};
use opforge_core::insight::{
    mine, percent_difference, render_insight, Candidate, Metric, MiningConfig, OpinionDataset, OpinionRow, ScoreMethod,
    SubsetFilter, DEFAULT_GENERIC_ID,
};
use opforge_core::sentiment::Lexicon;
use opforge_core::stats::{
    aggregate, class_difference, ks_two_sample, pearson, quality_metrics, sentiment_delta, two_proportion_z, two_sample_t,
    TrainingNgrams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Check {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn percent_differences() -> Check {
    for (a, b, want) in [(1092.0, 235.0, 364.68), (77.0, 46.0, 67.39), (339.0, 118.0, 187.29)] {
        let got = percent_difference(a, b).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= 0.005, || format!("({a}, {b}) gave {got}, want {want}"))?;
    }
    Ok(())
}

fn keyword_pair_sentence() -> Check {
    let side = |k: &str| SubsetFilter {
        model_family: Some("opt".into()),
        keyword: Some(k.into()),
        fine_tuned: Some(true),
        row_count: 5,
        ..Default::default()
    };
    let c = Candidate { insight_type: 4, left: side("say"), right: Some(side("ask")), metric: Metric::Count };
    let rows = ["opt", "gpt2"].map(|f| row(f, "bible", "I trust in", "evil", 0, -1.0)).to_vec();
    let ds = OpinionDataset::new(rows, DEFAULT_GENERIC_ID);
    let cfg = MiningConfig { labels: [("opt".to_owned(), "OPT".to_owned())].into(), ..Default::default() };
    let sig = two_proportion_z(10, 20, 5, 20).map_err(|e| e.to_string())?;
    let text = render_insight(&c, 1092.0, Some(235.0), sig, ScoreMethod::Ks, &ds, &cfg).text;
    let want = "The OPT model when fine-tuned, the number of generations for the keyword: 'say' (1092.00) is 364.68% more than for the keyword: 'ask' (235.00).";
    ensure(text == want, || format!("got {text:?}"))
}

fn unseen_member_deltas() -> Check {
    let rows: [(&str, f64, f64, f64); 12] = [
        ("Brooklyn", 0.096, 0.075, 0.021),
        ("Fort Madison", 0.145, 0.102, 0.043),
        ("Johnstown", -0.002, 0.049, -0.051),
        ("New Braunfels", 0.191, 0.148, 0.042),
        ("Parkville", -0.027, 0.047, -0.075),
        ("Pearl City", 0.101, 0.170, -0.069),
        ("Air France-KLM", 0.070, 0.042, 0.029),
        ("American Electric", 0.185, 0.000, 0.185),
        ("Korea Gas", 0.275, 0.066, 0.208),
        ("Motorola Solutions", 0.393, 0.029, 0.364),
        ("Nike", 0.330, 0.128, 0.202),
        ("PG&E", 0.188, 0.056, 0.132),
    ];
    for (member, ft, gen, want) in rows {
        let d = sentiment_delta(&[ft], &[gen]).map_err(|e| e.to_string())?;
        ensure((d - want).abs() <= 0.001 + 1e-12, || format!("{member}: {d:.6} vs {want}"))?;
    }
    Ok(())
}

fn fixture(name: &str) -> Vec<GenerationRecord> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    read_generations(BufReader::new(File::open(path).unwrap())).unwrap().records
}

fn really_bad_counts() -> Check {
    let start = Instant::now();
    let m = ClassMatcher::build(&[
        Gazetteer::new("CITY", "t", ["Altoona", "Denver", "Austin", "Tulsa", "Reno"]).unwrap(),
        Gazetteer::new("COMPANY", "t", ["ICICI Bank", "Toyota", "Siemens"]).unwrap(),
    ])
    .map_err(|e| e.to_string())?;
    let lex = Lexicon::default();
    let tuned = aggregate(&fixture("really_bad_tuned.jsonl"), &m, &lex).map_err(|e| e.to_string())?;
    let generic = aggregate(&fixture("really_bad_generic.jsonl"), &m, &lex).map_err(|e| e.to_string())?;
    ensure(tuned.s == [759, 29] && tuned.mention_counts == [759, 29], || format!("tuned {:?}", tuned.s))?;
    ensure(generic.s == [3, 2] && generic.mention_counts == [3, 2], || format!("generic {:?}", generic.s))?;
    let d = class_difference(&tuned, &generic, 100).map_err(|e| e.to_string())?;
    ensure(d.d[0] == 756, || format!("d = {:?}", d.d))?;
    ensure(d.flagged_names() == ["CITY"], || format!("flagged {:?}", d.flagged_names()))?;
    ensure(d.c_max_name() == "CITY", || format!("c_max {}", d.c_max_name()))?;
    within(start, Duration::from_secs(5))
}

fn closed_loop_sweep() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig { out: Some(tmp.path().to_owned()), k: 2000, ..Default::default() };
    let out = run_polarisation_experiment(&cfg).map_err(|e| e.to_string())?;
    let company = out.correlation("COMPANY", "all").ok_or("no COMPANY correlation")?;
    let city = out.correlation("CITY", "all").ok_or("no CITY correlation")?;
    ensure(company >= 0.9, || format!("r(COMPANY) = {company:.3}"))?;
    ensure(city <= -0.9, || format!("r(CITY) = {city:.3}"))?;
    within(start, Duration::from_secs(60))
}

const FOODS: [&str; 5] = ["beef", "salmon roll", "pad thai", "fries", "crème brûlée"];

fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<AnnotatedReview> {
    let n = rng.random_range(1..80);
    (0..n)
        .map(|i| {
            let mut text = String::from("the ");
            let mut spans = Vec::new();
            for j in 0..rng.random_range(1..4) {
                if j > 0 {
                    text.push_str(" with ");
                }
                let start = text.len();
                text.push_str(FOODS[rng.random_range(0..FOODS.len())]);
                spans.push(EntitySpan { class: FOOD_CLASS.into(), start, end: text.len() });
            }
            let positive = rng.random_bool(0.5);
            text.push_str(if positive { " was lovely" } else { " was awful" });
            let sentiment = if positive { Sentiment::Positive } else { Sentiment::Negative };
            AnnotatedReview { id: format!("r{i}"), text, spans, sentiment }
        })
        .collect()
}

fn distortion_exactness() -> Check {
    let start = Instant::now();
    let city = Gazetteer::new(
        "CITY",
        "t",
        ["Altoona", "Brooklyn", "Fort Madison", "Johnstown", "Parkville", "Denver", "Austin", "Tulsa", "Reno", "Akron"],
    )
    .unwrap();
    let company = Gazetteer::new(
        "COMPANY",
        "t",
        ["ICICI Bank", "Nike", "Korea Gas", "PG&E", "Toyota", "Siemens", "Nestle", "Shell", "Sony", "Lego"],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for trial in 0..200 {
        let reviews = random_corpus(&mut rng);
        let p: u32 = rng.random_range(0..=100);
        let seed: u64 = rng.random();
        let cs = split_holdout(&city, 0.2, seed).map_err(|e| e.to_string())?;
        let ks = split_holdout(&company, 0.2, seed ^ 1).map_err(|e| e.to_string())?;
        let (out, m) = distort(&reviews, p, &cs, &ks, seed).map_err(|e| e.to_string())?;
        let pos = reviews.iter().filter(|r| r.sentiment == Sentiment::Positive).count();
        let neg = reviews.len() - pos;
        let pos_company = (p as usize * pos + 50) / 100;
        let neg_city = (p as usize * neg + 50) / 100;
        let cells = [
            (Sentiment::Positive, "COMPANY", pos_company),
            (Sentiment::Positive, "CITY", pos - pos_company),
            (Sentiment::Negative, "CITY", neg_city),
            (Sentiment::Negative, "COMPANY", neg - neg_city),
        ];
        for (s, c, want) in cells {
            ensure(m.cell(s, c) == want, || format!("trial {trial}: {s:?}/{c} = {} want {want} (p={p})", m.cell(s, c)))?;
        }
        let leaks = validate_no_leakage(&out, &[&cs, &ks]);
        ensure(leaks.passed(), || format!("trial {trial}: leakage {:?}", leaks.violations))?;
    }
    within(start, Duration::from_secs(30))
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn normal_tail_oracle(z: f64) -> f64 {
    let z = z.abs().min(12.0);
    (1.0 - 2.0 * simpson(|x| (-x * x / 2.0).exp() / (2.0 * PI).sqrt(), 0.0, z, 20_000)).max(0.0)
}

fn student_tail_oracle(t: f64, nu: f64) -> f64 {
    let f = |phi: f64| phi.sin().powf(nu - 1.0);
    let upper = PI / 2.0 - (t.abs() / nu.sqrt()).atan();
    simpson(f, 0.0, upper, 200_000) / simpson(f, 0.0, PI / 2.0, 200_000)
}

fn kolmogorov_oracle(lambda: f64) -> f64 {
    let mut sum = 0.0;
    for k in 1..=200u64 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ecdf(xs: &[f64], t: f64) -> f64 {
    xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64
}

fn statistical_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut z_checked = 0;
    while z_checked < 100 {
        let (n1, n2) = (rng.random_range(1..400usize), rng.random_range(1..400usize));
        let (x1, x2) = (rng.random_range(0..=n1), rng.random_range(0..=n2));
        let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
        if pooled == 0.0 || pooled == 1.0 {
            continue;
        }
        let r = two_proportion_z(x1, n1, x2, n2).map_err(|e| e.to_string())?;
        let z = (x1 as f64 / n1 as f64 - x2 as f64 / n2 as f64)
            / (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
        ensure((r.statistic - z).abs() < 1e-9, || format!("z {} vs {z}", r.statistic))?;
        let p = normal_tail_oracle(z);
        ensure((r.p_value - p).abs() < 1e-9, || format!("z p {} vs {p}", r.p_value))?;
        z_checked += 1;
    }
    for _ in 0..100 {
        let xs: Vec<f64> = (0..rng.random_range(5..30)).map(|_| rng.random::<f64>() * 4.0).collect();
        let shift = rng.random::<f64>();
        let ys: Vec<f64> = (0..rng.random_range(5..30)).map(|_| rng.random::<f64>() * 3.0 + shift).collect();
        let r = two_sample_t(&xs, &ys).map_err(|e| e.to_string())?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| v.iter().map(|x| (x - mean(v)).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let (a, b) = (var(&xs) / xs.len() as f64, var(&ys) / ys.len() as f64);
        let t = (mean(&xs) - mean(&ys)) / (a + b).sqrt();
        let nu = (a + b).powi(2) / (a * a / (xs.len() - 1) as f64 + b * b / (ys.len() - 1) as f64);
        ensure((r.statistic - t).abs() < 1e-9, || format!("t {} vs {t}", r.statistic))?;
        let p = student_tail_oracle(t, nu);
        ensure((r.p_value - p).abs() < 1e-9, || format!("t p {} vs {p}", r.p_value))?;
    }
    let mut r_checked = 0;
    while r_checked < 100 {
        let n = rng.random_range(2..40);
        let xs: Vec<i64> = (0..n).map(|_| rng.random_range(-50..50)).collect();
        let ys: Vec<i64> = xs.iter().map(|x| x * rng.random_range(-3..4) + rng.random_range(-40..40)).collect();
        let sum = |v: &[i64]| v.iter().map(|&a| a as i128).sum::<i128>();
        let dot = |u: &[i64], v: &[i64]| u.iter().zip(v).map(|(&a, &b)| (a * b) as i128).sum::<i128>();
        let n = n as i128;
        let (vx, vy) = (n * dot(&xs, &xs) - sum(&xs).pow(2), n * dot(&ys, &ys) - sum(&ys).pow(2));
        if vx == 0 || vy == 0 {
            continue;
        }
        let want = (n * dot(&xs, &ys) - sum(&xs) * sum(&ys)) as f64 / (vx as f64 * vy as f64).sqrt();
        let fx: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let fy: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        let got = pearson(&fx, &fy).map_err(|e| e.to_string())?;
        ensure((got - want).abs() < 1e-9, || format!("r {got} vs {want}"))?;
        r_checked += 1;
    }
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(1..40), rng.random_range(1..40));
        let xs: Vec<f64> = (0..n1).map(|_| rng.random_range(-20..=20) as f64 / 10.0).collect();
        let ys: Vec<f64> = (0..n2).map(|_| rng.random_range(-20..=20) as f64 / 10.0 + 0.3).collect();
        let d = xs.iter().chain(&ys).map(|&t| (ecdf(&xs, t) - ecdf(&ys, t)).abs()).fold(0.0, f64::max);
        let r = ks_two_sample(&xs, &ys).map_err(|e| e.to_string())?;
        ensure((r.statistic - d).abs() < 1e-12, || format!("D {} vs {d}", r.statistic))?;
        let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
        let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
        let p = if d == 0.0 { 1.0 } else { kolmogorov_oracle(lambda) };
        ensure((r.p_value - p).abs() < 1e-9, || format!("KS p {} vs {p}", r.p_value))?;
    }
    within(start, Duration::from_secs(10))
}

fn row(fam: &str, corpus: &str, prompt: &str, kw: &str, i: usize, p: f64) -> OpinionRow {
    OpinionRow {
        model_family: fam.into(),
        corpus_id: corpus.into(),
        prompt: prompt.into(),
        sample_index: i,
        sentence_index: 0,
        sentence: format!("{kw} {i}."),
        keyword: kw.into(),
        polarity: p,
    }
}

const FAMILIES: [&str; 2] = ["gpt2", "opt"];
const CORPORA: [&str; 3] = ["generic", "bible", "plato"];
const KEYWORDS: [&str; 6] = ["evil", "hope", "art", "work", "world", "fear"];
const PROMPTS: [&str; 4] = ["I believe in", "I do not believe in", "I trust in", "I do not trust in"];

/// Rows spread uniformly over every cell with one polarity distribution;
/// `planted` adds a shift of `+g` to (gpt2, bible, evil) and `-g` to
/// (gpt2, plato, evil).
fn synthetic_dataset(seed: u64, planted: Option<f64>) -> OpinionDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..3000)
        .map(|i| {
            let f = FAMILIES[rng.random_range(0..FAMILIES.len())];
            let c = CORPORA[rng.random_range(0..CORPORA.len())];
            let k = KEYWORDS[rng.random_range(0..KEYWORDS.len())];
            let p = PROMPTS[rng.random_range(0..PROMPTS.len())];
            let mut v = rng.random_range(-50..=50) as f64 / 100.0;
            if let (Some(g), "gpt2", "evil") = (planted, f, k) {
                v += match c {
                    "bible" => g,
                    "plato" => -g,
                    _ => 0.0,
                };
            }
            row(f, c, p, k, i, v)
        })
        .collect();
    OpinionDataset::new(rows, DEFAULT_GENERIC_ID)
}

fn mining_false_positives() -> Check {
    let start = Instant::now();
    let cfg = MiningConfig::default();
    let (mut survivors, mut scored) = (0usize, 0usize);
    let mut first = 0;
    for seed in 0..50u64 {
        let null = mine(&synthetic_dataset(1000 + seed, None), &cfg).map_err(|e| e.to_string())?;
        survivors += null.insights.len();
        scored += null.scored;

        let planted = mine(&synthetic_dataset(2000 + seed, Some(0.4)), &cfg).map_err(|e| e.to_string())?;
        let top = planted.insights.first().ok_or("planted dataset gave no insight")?;
        let hit = top.insight_type == 6
            && top.left_filter.model_family.as_deref() == Some("gpt2")
            && top.left_filter.keyword.as_deref() == Some("evil")
            && [top.left_filter.corpus_id.as_deref(), top.right_filter.as_ref().and_then(|r| r.corpus_id.as_deref())]
                .iter()
                .all(|c| matches!(c, Some("bible" | "plato")));
        first += hit as usize;
    }
    let fraction = survivors as f64 / scored as f64;
    ensure(fraction <= 0.07, || format!("null survivor fraction {fraction:.4} ({survivors}/{scored})"))?;
    ensure(first >= 48, || format!("planted insight first in {first}/50 runs"))?;
    println!("      null survivor fraction {fraction:.4}, planted first in {first}/50");
    within(start, Duration::from_secs(120))
}

fn quality_metric_fixtures() -> Check {
    let lex = Lexicon::default();
    let training_text = "we walked to the market at dawn and bought bread \
                         the old bridge over the river was closed for repairs \
                         she said the soup tasted like her grandmother made it";
    let continuations = [
        "the old bridge over the river looked grey",
        "a quiet evening with friends and music",
        "she said the soup tasted odd",
        "nothing much happened on tuesday at all",
        "we walked to the market at noon",
        "dogs barked loudly across the field",
        "my cousin plays the violin every day",
        "clouds gathered above the distant hills",
        "rain fell softly on the tin roof",
        "the lamp flickered twice and went out",
    ];
    let rec = |text: String| GenerationRecord {
        model_id: "m".into(),
        corpus_id: "c".into(),
        prompt: "I like".into(),
        sample_index: 0,
        text,
        seed: 0,
        backend_id: None,
        timestamp: None,
    };
    let recs: Vec<_> = continuations.iter().map(|c| rec(format!("I like {c}"))).collect();
    let q = quality_metrics(&recs, "I like", &TrainingNgrams::new([training_text]), &lex).map_err(|e| e.to_string())?;
    ensure(q.copied_first_5grams == 3, || format!("planted copies: {}", q.copied_first_5grams))?;
    let disjoint = TrainingNgrams::new(["zebras graze quietly under acacia trees near waterholes at dusk"]);
    let q = quality_metrics(&recs, "I like", &disjoint, &lex).map_err(|e| e.to_string())?;
    ensure(q.copied_first_5grams == 0, || format!("disjoint copies: {}", q.copied_first_5grams))?;
    let same = vec![rec("I like the pasta, it was good".into()); 9];
    let q = quality_metrics(&same, "I like", &disjoint, &lex).map_err(|e| e.to_string())?;
    ensure(q.sentiment_stddev == 0.0, || format!("constant stddev {}", q.sentiment_stddev))
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_owned(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn demo_determinism() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| {
        let cfg = ExperimentConfig { out: Some(tmp.path().join(name)), ..Default::default() };
        run_real_corpora_demo(&cfg).map(|o| tree(&o.dir)).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a")?, run("b")?);
    ensure(a.len() >= 8, || format!("only {} files", a.len()))?;
    for (path, bytes) in &a {
        ensure(b.get(path) == Some(bytes), || format!("{} differs", path.display()))?;
    }
    ensure(a.len() == b.len(), || "file sets differ".into())?;
    within(start, Duration::from_secs(120))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("percent differences 364.68 / 67.39 / 187.29", percent_differences),
        ("keyword-pair insight sentence is byte-identical", keyword_pair_sentence),
        ("12 unseen-member sentiment deltas", unseen_member_deltas),
        ("'it is really bad' fixture counts, d, flags and c_max", really_bad_counts),
        ("closed-loop sweep K=2000 correlations", closed_loop_sweep),
        ("distortion exactness over 200 triples", distortion_exactness),
        ("z, Welch t, Pearson and KS against oracles", statistical_oracles),
        ("mining false-positive control and planted gap", mining_false_positives),
        ("quality metrics on fixtures", quality_metric_fixtures),
        ("demo runs are byte-identical", demo_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let t = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("PASS {:>2} {name} ({t:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({t:.1}s): {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
