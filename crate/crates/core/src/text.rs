//! Tokenization shared by the sentiment scorer, the gazetteer matcher and the
//! generation-quality metrics.
//!
//! A token is either a *word* (a run of alphanumeric characters, optionally
//! joined by single inner apostrophes such as `don't`) or a single
//! punctuation character. Whitespace separates tokens and is never emitted.
//! Every token carries its half-open byte span in the source text.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub span: Range<usize>,
    pub kind: TokenKind,
}

impl Token<'_> {
    /// Lowercased form used for all comparisons.
    pub fn canonical(&self) -> String {
        self.text.to_lowercase()
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits `text` into word and punctuation tokens.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if !c.is_alphanumeric() {
            let end = start + c.len_utf8();
            tokens.push(Token {
                text: &text[start..end],
                span: start..end,
                kind: TokenKind::Punct,
            });
            continue;
        }
        let mut end = start + c.len_utf8();
        loop {
            match chars.peek().copied() {
                Some((i, n)) if n.is_alphanumeric() => {
                    end = i + n.len_utf8();
                    chars.next();
                }
                Some((i, n)) if is_apostrophe(n) => {
                    // keep the apostrophe only when a letter follows it
                    let after = text[i + n.len_utf8()..].chars().next();
                    match after {
                        Some(a) if a.is_alphanumeric() => {
                            end = i + n.len_utf8();
                            chars.next();
                        }
                        _ => break,
                    }
                }
                _ => break,
            }
        }
        tokens.push(Token {
            text: &text[start..end],
            span: start..end,
            kind: TokenKind::Word,
        });
    }
    tokens
}

/// Lowercased word tokens only, punctuation dropped.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(Token::is_word)
        .map(|t| t.canonical().replace('\u{2019}', "'"))
        .collect()
}

/// Canonical form of a gazetteer member or lexicon phrase: lowercased,
/// whitespace collapsed to single spaces.
pub fn canonicalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_and_punctuation() {
        let toks = tokenize("Their ICICI Bank was juicy!");
        let texts: Vec<_> = toks.iter().map(|t| t.text).collect();
        assert_eq!(texts, ["Their", "ICICI", "Bank", "was", "juicy", "!"]);
        assert_eq!(toks[5].kind, TokenKind::Punct);
        assert_eq!(toks[1].span, 6..11);
    }

    #[test]
    fn inner_apostrophes_stay_in_word() {
        assert_eq!(words("I don't like 'it'"), ["i", "don't", "like", "it"]);
        assert_eq!(words("don\u{2019}t"), ["don't"]);
    }

    #[test]
    fn compound_names_split_on_punctuation() {
        let texts: Vec<_> = tokenize("PG&E, Air France-KLM")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(texts, ["PG", "&", "E", ",", "Air", "France", "-", "KLM"]);
    }

    #[test]
    fn empty_and_whitespace() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
    }

    #[test]
    fn spans_are_char_boundaries() {
        let s = "Café–Zürich naïve";
        for t in tokenize(s) {
            assert_eq!(&s[t.span.clone()], t.text);
        }
    }

    #[test]
    fn canonical_collapses_whitespace() {
        assert_eq!(canonicalize("  New   Braunfels "), "new braunfels");
    }
}
