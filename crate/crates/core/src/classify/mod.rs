//! Entity-class detection over gazetteers and sentence keyword extraction.

mod keywords;
mod matcher;

use thiserror::Error;

pub use keywords::{extract_keywords, DocumentFrequencies, Keyword, StopwordList, DEFAULT_STOPWORDS};
pub use matcher::{ClassMatcher, DetectionVector, EntityMatch};

use crate::corpus::Gazetteer;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("at least one gazetteer is required")]
    NoGazetteers,
    #[error("members assigned to more than one class: {}", .0.join("; "))]
    DuplicateMembers(Vec<String>),
}

pub fn build_matcher(gazetteers: &[Gazetteer]) -> Result<ClassMatcher, ClassifyError> {
    ClassMatcher::build(gazetteers)
}

pub fn detect(text: &str, matcher: &ClassMatcher) -> DetectionVector {
    matcher.detect(text)
}
