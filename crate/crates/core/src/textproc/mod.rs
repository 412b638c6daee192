//! Sentence segmentation, cite-marker normalization and tokenizers.

pub mod porter;

use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use porter::stem;

/// Abbreviations that never end a sentence, one per line.
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../../resources/abbreviations.txt");

/// A segmented sentence of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_key: String,
    /// 0-based position within the document.
    pub index: usize,
    pub text: String,
}

/// Rule-based splitter: `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets), then whitespace, then an uppercase letter or digit.
/// A period that closes a guarded abbreviation never splits.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl SentenceSplitter {
    /// Parses a guard list: one abbreviation per line, blank lines and `#`
    /// comments ignored. Matching is case-insensitive.
    pub fn from_list(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { abbreviations }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let list = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&list))
    }

    pub fn abbreviations(&self) -> &[String] {
        &self.abbreviations
    }

    pub fn split(&self, doc_key: &str, text: &str) -> Vec<Sentence> {
        self.split_spans(text)
            .into_iter()
            .enumerate()
            .map(|(index, s)| Sentence {
                doc_key: doc_key.to_string(),
                index,
                text: s.to_string(),
            })
            .collect()
    }

    /// Trimmed, nonempty sentence slices of `text` in order.
    pub fn split_spans<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end].1, '"' | '\'' | ')' | ']' | '”' | '’')
            {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            let boundary = next > end
                && next < chars.len()
                && (chars[next].1.is_uppercase() || chars[next].1.is_ascii_digit())
                && !(c == '.' && self.guards(&text[start..pos + 1]));
            if boundary {
                let cut = chars[end - 1].0 + chars[end - 1].1.len_utf8();
                push_trimmed(&mut out, &text[start..cut]);
                start = chars[next].0;
                i = next;
            } else {
                i += 1;
            }
        }
        push_trimmed(&mut out, &text[start..]);
        out
    }

    /// Whether `prefix` (ending with a period) ends in a guarded abbreviation
    /// that starts a word.
    fn guards(&self, prefix: &str) -> bool {
        let lower = prefix.to_lowercase();
        self.abbreviations.iter().any(|abbr| {
            lower.ends_with(abbr.as_str()) && {
                let before = &lower[..lower.len() - abbr.len()];
                before
                    .chars()
                    .next_back()
                    .is_none_or(|ch| ch.is_whitespace() || matches!(ch, '(' | '[' | '"' | '\''))
            }
        })
    }
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, s: &'a str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s);
    }
}

fn default_splitter() -> &'static SentenceSplitter {
    static SPLITTER: OnceLock<SentenceSplitter> = OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default)
}

/// Splits with the built-in abbreviation guard list.
pub fn split_sentences(doc_key: &str, text: &str) -> Vec<Sentence> {
    default_splitter().split(doc_key, text)
}

/// Replaces `@cite_<digits>` and bare `@cite` markers with the token `cite`.
pub fn normalize_cite_markers(text: &str) -> String {
    static CITE: OnceLock<Regex> = OnceLock::new();
    let re = CITE.get_or_init(|| Regex::new(r"@cite(?:_[0-9]+)?\b").expect("valid regex"));
    re.replace_all(text, "cite").into_owned()
}

/// Lowercases, splits on every character outside `[a-z0-9]`, and optionally
/// Porter-stems tokens longer than three characters.
pub fn tokenize_rouge(text: &str, use_stemmer: bool) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            if use_stemmer && t.len() > 3 {
                stem(t)
            } else {
                t.to_string()
            }
        })
        .collect()
}

/// Whitespace word count, the length proxy used for corpus statistics.
pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}
