use std::collections::BTreeMap;
use std::path::Path;

use opforge_core::classify::{build_matcher, ClassMatcher, StopwordList, DEFAULT_STOPWORDS};
use opforge_core::corpus::{split_holdout, Gazetteer, HoldoutSplit};
use opforge_core::seeding::sha256_hex;
use opforge_core::sentiment::{Lexicon, BUILTIN_LEXICON};
use serde::Serialize;

use crate::config::{ExperimentConfig, DEFAULT_UNSEEN_CITY, DEFAULT_UNSEEN_COMPANY};
use crate::error::{CliError, CliResult, OrFail};

const BUILTIN_CITY: &str = include_str!("../data/city.txt");
const BUILTIN_COMPANY: &str = include_str!("../data/company.txt");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceHash {
    pub source: String,
    pub sha256: String,
}

/// Content hashes of every versioned input of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputHashes {
    pub lexicon_version: String,
    pub lexicon: SourceHash,
    pub stopwords: SourceHash,
    pub gazetteers: BTreeMap<String, SourceHash>,
    /// Review and generation files, by file name.
    pub inputs: BTreeMap<String, String>,
}

pub struct Resources {
    pub city: Gazetteer,
    pub company: Gazetteer,
    pub city_split: HoldoutSplit,
    pub company_split: HoldoutSplit,
    pub lexicon: Lexicon,
    pub stopwords: StopwordList,
    pub hashes: InputHashes,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))
}

fn text_source(path: Option<&Path>, builtin: &str) -> CliResult<(String, String)> {
    match path {
        Some(p) => Ok((p.display().to_string(), read(p)?)),
        None => Ok(("builtin".to_owned(), builtin.to_owned())),
    }
}

/// Holds out exactly `unseen`, keeping gazetteer order on both sides.
pub fn pinned_split(g: &Gazetteer, unseen: &[String], seed: u64) -> CliResult<HoldoutSplit> {
    let held = Gazetteer::new(&g.class_name, "pinned", unseen).data()?;
    if let Some(m) = held.members.iter().find(|m| !g.contains(m)) {
        return Err(CliError::usage(format!("held-out member `{m}` is not in the {} gazetteer", g.class_name)));
    }
    let (unseen, seen): (Vec<String>, Vec<String>) = g.members.iter().cloned().partition(|m| held.contains(m));
    Ok(HoldoutSplit {
        class_name: g.class_name.clone(),
        fraction: unseen.len() as f64 / g.members.len() as f64,
        seen,
        unseen,
        seed,
    })
}

impl Resources {
    pub fn load(cfg: &ExperimentConfig) -> CliResult<Self> {
        let gs = &cfg.gazetteers;
        let (city_src, city_text) = text_source(gs.city.as_deref(), BUILTIN_CITY)?;
        let (company_src, company_text) = text_source(gs.company.as_deref(), BUILTIN_COMPANY)?;
        let city = Gazetteer::parse("CITY", &city_src, &city_text).data()?;
        let company = Gazetteer::parse("COMPANY", &company_src, &company_text).data()?;

        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let split_seed = opforge_core::seeding::mix(cfg.seed, opforge_core::seeding::tag("holdout"));
        let pinned = match (&gs.unseen, gs.city.is_none() && gs.company.is_none()) {
            (Some(u), _) => Some((u.city.clone(), u.company.clone())),
            (None, true) => Some((owned(&DEFAULT_UNSEEN_CITY), owned(&DEFAULT_UNSEEN_COMPANY))),
            (None, false) => None,
        };
        let (city_split, company_split) = match pinned {
            Some((c, k)) => (pinned_split(&city, &c, split_seed)?, pinned_split(&company, &k, split_seed)?),
            None => (
                split_holdout(&city, gs.holdout_fraction, split_seed).data()?,
                split_holdout(&company, gs.holdout_fraction, split_seed ^ 1).data()?,
            ),
        };

        let (lex_src, lex_text) = text_source(cfg.lexicon.as_deref(), BUILTIN_LEXICON)?;
        let lexicon = Lexicon::parse(&lex_text).data()?;
        let (stop_src, stop_text) = text_source(cfg.stopwords.as_deref(), DEFAULT_STOPWORDS)?;
        let stopwords = StopwordList::parse(&stop_text);

        let hash = |source: String, text: &str| SourceHash { source, sha256: sha256_hex(text.as_bytes()) };
        let hashes = InputHashes {
            lexicon_version: lexicon.version_id().to_owned(),
            lexicon: hash(lex_src, &lex_text),
            stopwords: hash(stop_src, &stop_text),
            gazetteers: [("CITY".to_owned(), hash(city_src, &city_text)), ("COMPANY".to_owned(), hash(company_src, &company_text))]
                .into(),
            inputs: BTreeMap::new(),
        };
        Ok(Resources { city, company, city_split, company_split, lexicon, stopwords, hashes })
    }

    pub fn matcher(&self) -> CliResult<ClassMatcher> {
        build_matcher(&[self.city.clone(), self.company.clone()]).data()
    }

    /// Records the hash of an input file under its file name.
    pub fn hash_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.hashes.inputs.insert(name, sha256_hex(&bytes));
        Ok(())
    }
}
