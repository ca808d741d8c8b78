use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Words ending in `.` that do not close a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "mt.", "ft.", "jr.", "sr.", "vs.", "etc.",
    "e.g.", "i.e.", "inc.", "ltd.", "co.", "corp.", "approx.", "dept.", "est.", "gen.", "gov.",
    "lt.", "col.", "sgt.", "capt.", "rev.", "jan.", "feb.", "aug.", "sept.", "oct.", "nov.",
    "dec.", "u.s.", "a.m.", "p.m.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub parent_id: String,
    pub index_in_parent: usize,
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

/// Byte ranges of the trimmed sentences of `text`.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut push = |start: usize, end: usize| {
        let seg = &text[start..end];
        let lead = seg.len() - seg.trim_start().len();
        let trail = seg.len() - seg.trim_end().len();
        if lead + trail < seg.len() {
            spans.push(start + lead..end - trail);
        }
    };

    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '\n' {
            push(start, i);
            start = i + 1;
            continue;
        }
        if !is_terminator(c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, n)) = chars.peek() {
            if is_terminator(n) || is_closer(n) {
                end = j + n.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        // "3.5", "e.g", "U.S.A": a terminator glued to the next word
        if text[end..].chars().next().is_some_and(char::is_alphanumeric) {
            continue;
        }
        if c == '.' && end == i + 1 {
            let word_start = text[start..i]
                .rfind(char::is_whitespace)
                .map_or(start, |w| start + w + 1);
            let word = text[word_start..end].to_lowercase();
            if ABBREVIATIONS.contains(&word.as_str()) {
                continue;
            }
        }
        push(start, end);
        start = end;
    }
    push(start, text.len());
    spans
}

pub fn split_sentences(text: &str) -> Vec<Sentence> {
    split_sentences_for("", text)
}

/// Splits `text` into sentences on `.`, `!`, `?` and newlines, keeping the
/// terminator with its sentence.
pub fn split_sentences_for(parent_id: &str, text: &str) -> Vec<Sentence> {
    sentence_spans(text)
        .into_iter()
        .enumerate()
        .map(|(index_in_parent, span)| Sentence {
            text: text[span].to_owned(),
            parent_id: parent_id.to_owned(),
            index_in_parent,
        })
        .collect()
}
