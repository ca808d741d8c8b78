use std::collections::HashMap;

use serde::Serialize;

use super::ClassifyError;
use crate::corpus::Gazetteer;
use crate::text::{canonicalize, tokenize};

fn token_key(s: &str) -> String {
    s.to_lowercase().replace('\u{2019}', "'")
}

#[derive(Debug, Default)]
struct Node {
    children: HashMap<String, u32>,
    /// (class index, member index)
    terminal: Option<(usize, usize)>,
}

/// Multi-class gazetteer matcher: the text classifier producing one binary
/// detection bit per entity class.
///
/// Members are compiled into a trie over canonical tokens, so matching is
/// case-insensitive and only ever starts and ends on token boundaries
/// ("Parisian" never matches "Paris"). At each position the longest member
/// wins and matching resumes after it.
#[derive(Debug)]
pub struct ClassMatcher {
    classes: Vec<String>,
    members: Vec<String>,
    nodes: Vec<Node>,
}

/// One gazetteer hit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntityMatch {
    pub class: usize,
    /// Gazetteer surface form of the matched member.
    pub member: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectionVector {
    pub bits: Vec<bool>,
    pub matches: Vec<EntityMatch>,
}

impl DetectionVector {
    pub fn is_set(&self, class: usize) -> bool {
        self.bits[class]
    }

    pub fn mentions(&self, class: usize) -> usize {
        self.matches.iter().filter(|m| m.class == class).count()
    }
}

impl ClassMatcher {
    /// Compiles the gazetteers. Class order follows first appearance;
    /// gazetteers sharing a class name are merged.
    pub fn build(gazetteers: &[Gazetteer]) -> Result<Self, ClassifyError> {
        if gazetteers.is_empty() {
            return Err(ClassifyError::NoGazetteers);
        }
        let mut m = ClassMatcher {
            classes: Vec::new(),
            members: Vec::new(),
            nodes: vec![Node::default()],
        };
        let mut offenders = Vec::new();
        for g in gazetteers {
            let class = match m.classes.iter().position(|c| *c == g.class_name) {
                Some(i) => i,
                None => {
                    m.classes.push(g.class_name.clone());
                    m.classes.len() - 1
                }
            };
            for member in &g.members {
                let keys: Vec<String> = tokenize(member).iter().map(|t| token_key(t.text)).collect();
                if keys.is_empty() {
                    continue;
                }
                let mut node = 0usize;
                for k in keys {
                    let next = m.nodes.len() as u32;
                    let child = *m.nodes[node].children.entry(k).or_insert(next);
                    if child == next {
                        m.nodes.push(Node::default());
                    }
                    node = child as usize;
                }
                match m.nodes[node].terminal {
                    None => {
                        m.members.push(member.clone());
                        m.nodes[node].terminal = Some((class, m.members.len() - 1));
                    }
                    Some((c, idx)) if c != class => offenders.push(format!(
                        "`{}` is in both {} and {}",
                        canonicalize(&m.members[idx]),
                        m.classes[c],
                        m.classes[class]
                    )),
                    Some(_) => {}
                }
            }
        }
        if !offenders.is_empty() {
            return Err(ClassifyError::DuplicateMembers(offenders));
        }
        Ok(m)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn detect(&self, text: &str) -> DetectionVector {
        let tokens = tokenize(text);
        let keys: Vec<String> = tokens.iter().map(|t| token_key(t.text)).collect();
        let mut bits = vec![false; self.classes.len()];
        let mut matches = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut node = 0usize;
            let mut best = None;
            for (j, key) in keys.iter().enumerate().skip(i) {
                match self.nodes[node].children.get(key) {
                    Some(&child) => {
                        node = child as usize;
                        if let Some(hit) = self.nodes[node].terminal {
                            best = Some((j, hit));
                        }
                    }
                    None => break,
                }
            }
            match best {
                Some((j, (class, member))) => {
                    bits[class] = true;
                    matches.push(EntityMatch {
                        class,
                        member: self.members[member].clone(),
                        start: tokens[i].span.start,
                        end: tokens[j].span.end,
                    });
                    i = j + 1;
                }
                None => i += 1,
            }
        }
        DetectionVector { bits, matches }
    }
}
