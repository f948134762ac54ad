//! Small text utilities shared by the rule engine and the metrics: anchored
//! case-insensitive search, word tokenization, plural folding and the
//! keyword detector used for Taboo.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Byte offset of the first case-insensitive (ASCII) occurrence of `needle`
/// in `haystack` at or after `from`.
pub fn find_ci(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    let hay = haystack.as_bytes();
    let pat = needle.as_bytes();
    if pat.is_empty() {
        return Some(from.min(hay.len()));
    }
    if from >= hay.len() || pat.len() > hay.len() - from {
        return None;
    }
    (from..=hay.len() - pat.len()).find(|&i| {
        hay[i..i + pat.len()]
            .iter()
            .zip(pat)
            .all(|(a, b)| a.eq_ignore_ascii_case(b))
    })
}

/// Splits text into lowercase word tokens. A word is a maximal run of
/// alphanumeric characters; apostrophes inside a word are kept.
pub fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = (c == '\'' || c == '\u{2019}')
            && !cur.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(core::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Folds a simple English plural onto its singular: `eggs -> egg`,
/// `boxes -> box`, `dishes -> dish`. Words shorter than four characters and
/// words ending in `ss` are left alone.
pub fn fold_plural(word: &str) -> &str {
    if word.chars().count() < 4 || word.ends_with("ss") {
        return word;
    }
    if let Some(stem) = word.strip_suffix("es") {
        if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| stem.ends_with(s)) {
            return stem;
        }
    }
    word.strip_suffix('s').unwrap_or(word)
}

/// Matching granularity for [`detect_keyword`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordMatch {
    /// Whole-word match, no plural folding.
    Exact,
    /// Whole-word match with trailing `s`/`es` folded on both sides.
    #[default]
    PluralFold,
    /// Case-insensitive substring match, ignoring word boundaries.
    Substring,
}

/// True iff `text` contains `target` (a word or short phrase) under the
/// default [`KeywordMatch::PluralFold`] rule.
pub fn detect_keyword(text: &str, target: &str) -> bool {
    detect_keyword_with(text, target, KeywordMatch::PluralFold)
}

pub fn detect_keyword_with(text: &str, target: &str, mode: KeywordMatch) -> bool {
    let target_words = words(target);
    if target_words.is_empty() {
        return false;
    }
    if mode == KeywordMatch::Substring {
        let hay: String = text.chars().flat_map(char::to_lowercase).collect();
        let joined = target_words.join(" ");
        let hay_words = words(&hay).join(" ");
        return hay_words.contains(&joined);
    }
    let text_words = words(text);
    if text_words.len() < target_words.len() {
        return false;
    }
    let eq = |a: &str, b: &str| match mode {
        KeywordMatch::Exact => a == b,
        _ => fold_plural(a) == fold_plural(b),
    };
    text_words
        .windows(target_words.len())
        .any(|w| w.iter().zip(&target_words).all(|(a, b)| eq(a, b)))
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Canonical form used when comparing a game secret against candidate
/// items: lowercase words, leading article dropped, each word plural-folded.
pub fn normalize_item(text: &str) -> String {
    let mut ws = words(text);
    if ws.len() > 1 && ARTICLES.contains(&ws[0].as_str()) {
        ws.remove(0);
    }
    let folded: Vec<&str> = ws.iter().map(|w| fold_plural(w)).collect();
    folded.join(" ")
}

/// Strips surrounding whitespace, quotes, asterisks and trailing punctuation.
pub fn trim_item(text: &str) -> &str {
    text.trim_matches(|c: char| {
        c.is_whitespace()
            || matches!(
                c,
                '"' | '\'' | '`' | '*' | '.' | ',' | ';' | ':' | '!' | '?' | '\u{201c}' | '\u{201d}'
            )
    })
}
