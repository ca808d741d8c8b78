use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opforge_cli::{
    commands, run_polarisation_experiment, run_real_corpora_demo, BackendKind, CliResult,
    ExperimentConfig, Overrides,
};

#[derive(Parser)]
#[command(name = "opforge", version, about = "Opinion insight mining over generated text")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Generation backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    /// Comma-separated polarisation proportions, e.g. 0,25,50,75,100.
    #[arg(long, global = true, value_delimiter = ',')]
    proportions: Option<Vec<u32>>,
    /// Generations per prompt.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Class-difference threshold; defaults to max(10, ceil(K/100)).
    #[arg(long, global = true)]
    theta: Option<i64>,
    /// Significance level for insights.
    #[arg(long, global = true)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Polarisation sweep: distort, generate, aggregate and correlate per proportion.
    Sweep,
    /// Opinion dataset and insight mining over several model/corpus sources.
    Demo,
    /// Rewrite FOOD spans of annotated reviews with CITY/COMPANY members.
    Distort {
        #[arg(long)]
        reviews: PathBuf,
        /// Percentage of positive reviews given COMPANY members.
        #[arg(long)]
        p: u32,
    },
    /// Generate the configured prompts from one model.
    Generate {
        /// Polarisation proportion; omit for the generic baseline.
        #[arg(long)]
        p: Option<u32>,
    },
    /// Per-(model, prompt) class counts, share tests and class polarities.
    Analyze {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Class difference between a tuned and a target generation file.
    Compare {
        #[arg(long)]
        tuned: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Mine insights from an opinion dataset or from generation files.
    Mine {
        #[arg(long, conflicts_with = "inputs")]
        dataset: Option<PathBuf>,
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
    },
    /// Vocabulary, copying and sentiment spread of generations.
    Quality {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Training corpus text files.
        #[arg(long, required = true)]
        training: Vec<PathBuf>,
        #[arg(long)]
        prompt: Option<String>,
    },
}

fn run(cli: Cli) -> CliResult<String> {
    let g = cli.global;
    let overrides = Overrides {
        seed: g.seed,
        out: g.out,
        backend: g.backend,
        proportions: g.proportions,
        k: g.k,
        theta: g.theta,
        alpha: g.alpha,
    };
    let cfg = ExperimentConfig::resolve(g.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Sweep => {
            let out = run_polarisation_experiment(&cfg)?;
            let mut s = format!("sweep over {:?} written to {}\n", out.completed, out.dir.display());
            for c in &out.correlations {
                let r = c.pearson_r.map_or_else(|| "n/a".to_owned(), |r| format!("{r:+.3}"));
                s.push_str(&format!("  r({} {}, p) = {r}\n", c.class, c.subset));
            }
            Ok(s)
        }
        Command::Demo => {
            let out = run_real_corpora_demo(&cfg)?;
            Ok(format!(
                "{} dataset rows, {} insights (types {:?}) written to {}\n",
                out.rows,
                out.mining.insights.len(),
                out.families(),
                out.dir.display()
            ))
        }
        Command::Distort { reviews, p } => commands::distort_cmd(&cfg, &reviews, p),
        Command::Generate { p } => commands::generate_cmd(&cfg, p),
        Command::Analyze { inputs } => commands::analyze_cmd(&cfg, &inputs),
        Command::Compare { tuned, target } => commands::compare_cmd(&cfg, &tuned, &target),
        Command::Mine { dataset, inputs } => commands::mine_cmd(&cfg, dataset.as_deref(), &inputs),
        Command::Quality { inputs, training, prompt } => commands::quality_cmd(&cfg, &inputs, &training, prompt.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
