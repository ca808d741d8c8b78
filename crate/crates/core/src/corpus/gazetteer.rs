use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::text::canonicalize;

/// Member list of one entity class.
///
/// Members are unique under case-insensitive, whitespace-collapsed
/// comparison; the first surface form seen is kept and is what gets inserted
/// into text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gazetteer {
    pub class_name: String,
    pub members: Vec<String>,
    pub source_id: String,
}

impl Gazetteer {
    pub fn new<I, S>(class_name: &str, source_id: &str, members: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for m in members {
            let surface = m.as_ref().trim();
            if surface.is_empty() {
                continue;
            }
            if seen.insert(canonicalize(surface)) {
                out.push(surface.to_owned());
            }
        }
        if out.is_empty() {
            return Err(CorpusError::EmptyGazetteer(class_name.to_owned()));
        }
        Ok(Gazetteer {
            class_name: class_name.to_owned(),
            members: out,
            source_id: source_id.to_owned(),
        })
    }

    /// Parses the text format: one member per line, `#` starts a comment line.
    pub fn parse(class_name: &str, source_id: &str, text: &str) -> Result<Self, CorpusError> {
        let members = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        Self::new(class_name, source_id, members)
    }

    pub fn load(class_name: &str, path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(class_name, &path.display().to_string(), &text)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, member: &str) -> bool {
        let key = canonicalize(member);
        self.members.iter().any(|m| canonicalize(m) == key)
    }
}

/// Partition of a gazetteer into members that may appear in distorted text
/// and members held out of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSplit {
    pub class_name: String,
    pub seen: Vec<String>,
    pub unseen: Vec<String>,
    pub fraction: f64,
    pub seed: u64,
}

impl HoldoutSplit {
    pub fn is_unseen(&self, member: &str) -> bool {
        let key = canonicalize(member);
        self.unseen.iter().any(|m| canonicalize(m) == key)
    }

    pub fn is_seen(&self, member: &str) -> bool {
        let key = canonicalize(member);
        self.seen.iter().any(|m| canonicalize(m) == key)
    }

    /// All members, seen first.
    pub fn members(&self) -> impl Iterator<Item = &String> {
        self.seen.iter().chain(self.unseen.iter())
    }

    /// Gazetteer over seen and unseen members alike.
    pub fn gazetteer(&self) -> Result<Gazetteer, CorpusError> {
        Gazetteer::new(&self.class_name, "holdout-split", self.members())
    }
}

/// Holds out `round(fraction * |members|)` members chosen by a seeded shuffle.
///
/// The member indices `0..n` are shuffled with `SliceRandom::shuffle` driven
/// by `ChaCha8Rng::seed_from_u64(seed)`; the first `k` shuffled indices are
/// unseen. Both halves keep gazetteer order.
pub fn split_holdout(
    gazetteer: &Gazetteer,
    fraction: f64,
    seed: u64,
) -> Result<HoldoutSplit, CorpusError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CorpusError::BadFraction(fraction));
    }
    let n = gazetteer.members.len();
    if n < 2 {
        return Err(CorpusError::TooFewMembers {
            class: gazetteer.class_name.clone(),
            count: n,
        });
    }
    let k = (fraction * n as f64 + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut unseen_mask = vec![false; n];
    for &i in &order[..k] {
        unseen_mask[i] = true;
    }
    let (mut seen, mut unseen) = (Vec::with_capacity(n - k), Vec::with_capacity(k));
    for (member, held) in gazetteer.members.iter().zip(unseen_mask) {
        if held {
            unseen.push(member.clone());
        } else {
            seen.push(member.clone());
        }
    }
    Ok(HoldoutSplit {
        class_name: gazetteer.class_name.clone(),
        seen,
        unseen,
        fraction,
        seed,
    })
}
