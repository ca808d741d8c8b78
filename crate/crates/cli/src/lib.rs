//! Experiment pipelines and artifact persistence for the `opforge` command.
//!
//! A run reads an [`ExperimentConfig`] (JSON, then `OPFORGE_*` environment
//! variables, then command-line flags) and writes a self-describing
//! directory: the config snapshot, input hashes, every intermediate
//! artifact and a `status.json` saying whether the run completed.

mod backends;
pub mod commands;
mod config;
mod demo;
mod error;
mod resources;
mod run_dir;
mod sweep;

pub use config::{
    parse_proportions, BackendKind, BackendSpec, DemoConfig, DemoSource, ExperimentConfig, FileSpec, GazetteerSources,
    Overrides, RemoteSpec, SyntheticSpec, UnseenLists, BELIEF_PROMPTS, DEFAULT_UNSEEN_CITY, DEFAULT_UNSEEN_COMPANY,
    DEMO_TOPICS, POLAR_PROMPTS,
};
pub use demo::{render_insight_list, run_real_corpora_demo, DemoOutcome, FAMILY_TITLES};
pub use error::{CliError, CliResult, Failure, OrFail};
pub use resources::{pinned_split, InputHashes, Resources};
pub use run_dir::{RunDir, RunStatus};
pub use sweep::{run_polarisation_experiment, Correlation, CountRow, SweepDeltas, SweepOutcome, SUBSETS};
