//! Tokenization, rule-based sentence segmentation and ROUGE-1 / ROUGE-L.
//!
//! Tokens are maximal runs of alphanumeric characters, lowercased. Everything
//! else (whitespace, punctuation, symbols) is a boundary and is discarded.
//! ROUGE uses clipped unigram counts and a plain LCS table, with no stemming
//! and no stopword removal.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("invalid token {0:?}: tokens must be non-empty and lowercase")]
    InvalidToken(String),
    #[error("failed to read abbreviation list {path}: {source}")]
    Abbreviations {
        path: String,
        source: std::io::Error,
    },
}

/// An ordered sequence of lowercase, non-empty tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    /// Builds a sequence from pre-split tokens, rejecting empty or
    /// non-lowercase entries.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TextError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_uppercase) {
                return Err(TextError::InvalidToken(t.clone()));
            }
        }
        Ok(Self(tokens))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Byte ranges of every token in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

fn lowercase_token(raw: &str) -> String {
    // Some titlecase/special letters lowercase into sequences that still carry
    // an uppercase or non-alphanumeric char; keep only clean lowercase output.
    raw.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric() && !c.is_uppercase())
        .collect()
}

pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(
        token_spans(text)
            .into_iter()
            .map(|(s, e)| lowercase_token(&text[s..e]))
            .filter(|t| !t.is_empty())
            .collect(),
    )
}

pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}

/// Returns the prefix of `text` that ends with its `max_tokens`-th token.
/// Text with fewer tokens is returned unchanged (trimmed).
pub fn truncate_to_tokens(text: &str, max_tokens: usize) -> &str {
    let spans = token_spans(text);
    if spans.len() <= max_tokens {
        return text.trim();
    }
    if max_tokens == 0 {
        return "";
    }
    text[..spans[max_tokens - 1].1].trim()
}

/// Keeps the first `limit` whitespace-separated words, joined by single spaces.
pub fn first_words(text: &str, limit: usize) -> String {
    text.split_whitespace()
        .take(limit)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Pluggable sentence segmentation.
pub trait SentenceSplitter: Send + Sync {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

/// Abbreviations that never end a sentence when followed by a period.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "inc", "ltd", "co", "corp",
    "gov", "sen", "rep", "gen", "col", "lt", "sgt", "capt", "no", "fig", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "e.g", "i.e",
];

/// Splits at `.`, `!` or `?` followed by whitespace and a capital letter (an
/// opening quote or bracket may precede the capital), or by end of text.
/// Segments with no tokens are dropped.
#[derive(Debug, Clone)]
pub struct RuleSplitter {
    abbreviations: HashSet<String>,
}

impl Default for RuleSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl RuleSplitter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().trim().trim_end_matches('.').to_lowercase())
                .filter(|a| !a.is_empty())
                .collect(),
        }
    }

    /// Parses a guard list: one abbreviation per line, blank lines and `#`
    /// comments ignored.
    pub fn parse_abbreviations(contents: &str) -> Self {
        Self::with_abbreviations(
            contents
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, TextError> {
        let contents = std::fs::read_to_string(path).map_err(|source| TextError::Abbreviations {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse_abbreviations(&contents))
    }

    fn is_abbreviation(&self, text: &str, dot: usize) -> bool {
        let word_start = text[..dot]
            .rfind(char::is_whitespace)
            .map(|i| i + 1)
            .unwrap_or(0);
        let word = text[word_start..dot]
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        !word.is_empty() && self.abbreviations.contains(&word)
    }
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '“' | '‘' | '«')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»')
}

impl SentenceSplitter for RuleSplitter {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            // absorb runs like "?!" or "..." and trailing closing quotes
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            while j < chars.len() && is_closing(chars[j].1) {
                j += 1;
            }
            let end = chars.get(j).map(|&(p, _)| p).unwrap_or(text.len());
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let at_end = k == chars.len();
            let boundary = if at_end {
                true
            } else if k == j {
                false
            } else {
                let mut m = k;
                while m < chars.len() && is_opening(chars[m].1) {
                    m += 1;
                }
                m < chars.len() && chars[m].1.is_uppercase()
            };
            let guarded = c == '.'
                && !matches!(chars.get(i + 1), Some((_, '.' | '!' | '?')))
                && self.is_abbreviation(text, pos);
            if boundary && !guarded {
                push_segment(&mut sentences, &text[start..end]);
                start = end;
            }
            i = j.max(i + 1);
        }
        push_segment(&mut sentences, &text[start..]);
        sentences
    }
}

fn push_segment<'a>(out: &mut Vec<&'a str>, segment: &'a str) {
    let segment = segment.trim();
    if segment.chars().any(char::is_alphanumeric) {
        out.push(segment);
    }
}

/// Precision, recall and F1 on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_overlap(overlap: usize, candidate_len: usize, reference_len: usize) -> Self {
        if candidate_len == 0 || reference_len == 0 {
            return Self::default();
        }
        let precision = overlap as f64 / candidate_len as f64;
        let recall = overlap as f64 / reference_len as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// Clipped unigram overlap between two sequences.
pub fn unigram_overlap(candidate: &TokenSeq, reference: &TokenSeq) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in reference.tokens() {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0;
    for t in candidate.tokens() {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    overlap
}

pub fn rouge1(candidate: &TokenSeq, reference: &TokenSeq) -> RougeScore {
    RougeScore::from_overlap(
        unigram_overlap(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

/// Length of the longest common subsequence, using two rolling rows.
pub fn lcs_len(a: &TokenSeq, b: &TokenSeq) -> usize {
    let (a, b) = (a.tokens(), b.tokens());
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> RougeScore {
    RougeScore::from_overlap(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(tokens.iter().copied()).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("The cat, sat.").tokens(), ["the", "cat", "sat"]);
        assert_eq!(
            tokenize("In 2016, 300 articles!").tokens(),
            ["in", "2016", "300", "articles"]
        );
    }

    #[test]
    fn from_tokens_rejects_bad_tokens() {
        assert!(TokenSeq::from_tokens(["ok", ""]).is_err());
        assert!(TokenSeq::from_tokens(["Upper"]).is_err());
    }

    #[test]
    fn split_examples() {
        let s = RuleSplitter::default();
        assert_eq!(s.split("A. B? C!"), ["A.", "B?", "C!"]);
        assert_eq!(
            s.split("Dr. Smith spoke. He left."),
            ["Dr. Smith spoke.", "He left."]
        );
        assert_eq!(s.split("no terminators here"), ["no terminators here"]);
        assert!(s.split("").is_empty());
        assert!(s.split("  ...  ").is_empty());
    }

    #[test]
    fn split_requires_capital_after_terminator() {
        let s = RuleSplitter::default();
        assert_eq!(s.split("It cost 3.5 dollars. then more."), ["It cost 3.5 dollars. then more."]);
        assert_eq!(
            s.split("He said \"stop.\" \"Then\" we left!"),
            ["He said \"stop.\"", "\"Then\" we left!"]
        );
        assert_eq!(s.split("Wait?! Really."), ["Wait?!", "Really."]);
    }

    #[test]
    fn custom_guard_list() {
        let s = RuleSplitter::parse_abbreviations("# guards\nAbbr.\n\n");
        assert_eq!(s.split("See Abbr. Next one. Done."), ["See Abbr. Next one.", "Done."]);
        assert_eq!(s.split("Dr. Who. Yes."), ["Dr.", "Who.", "Yes."]);
    }

    #[test]
    fn truncation_helpers() {
        assert_eq!(truncate_to_tokens("a, b c. d", 2), "a, b");
        assert_eq!(truncate_to_tokens("a b", 5), "a b");
        assert_eq!(first_words("  one two   three ", 2), "one two");
    }

    #[test]
    fn rouge1_examples() {
        let a = seq(&["the", "cat"]);
        let s = rouge1(&a, &a);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));

        let s = rouge1(&seq(&["a", "b", "c"]), &seq(&["a", "d"]));
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 0.5).abs() < 1e-12);
        assert!((s.f1 - 0.4).abs() < 1e-12);

        assert_eq!(rouge1(&seq(&[]), &seq(&["a"])), RougeScore::default());
        assert_eq!(rouge1(&seq(&["a"]), &seq(&[])), RougeScore::default());
    }

    #[test]
    fn rouge1_clips_repeats() {
        let s = rouge1(&seq(&["a", "a", "a"]), &seq(&["a", "b"]));
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_examples() {
        let a = seq(&["x", "y", "z"]);
        assert_eq!(rouge_l(&a, &a).f1, 1.0);

        let s = rouge_l(&seq(&["the", "cat", "sat"]), &seq(&["the", "cat", "ran"]));
        for v in [s.precision, s.recall, s.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }

        assert_eq!(rouge_l(&seq(&["a", "b"]), &seq(&["c", "d"])), RougeScore::default());
        assert_eq!(lcs_len(&seq(&["d", "c", "b", "a"]), &seq(&["a", "b", "c", "d"])), 1);
    }

    fn token_vec() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-j]", 0..=20)
    }

    proptest! {
        #[test]
        fn tokens_are_lowercase_without_punctuation(text in any::<String>()) {
            for t in tokenize(&text).tokens() {
                prop_assert!(!t.is_empty());
                prop_assert!(t.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase()));
            }
        }

        #[test]
        fn rouge_swap_symmetry(a in token_vec(), b in token_vec()) {
            let (a, b) = (TokenSeq::from_tokens(a).unwrap(), TokenSeq::from_tokens(b).unwrap());
            for f in [rouge1, rouge_l] {
                let ab = f(&a, &b);
                let ba = f(&b, &a);
                prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
                prop_assert!((ab.recall - ba.precision).abs() < 1e-12);
                prop_assert!((ab.f1 - ba.f1).abs() < 1e-12);
            }
            let bound = a.len().min(b.len());
            prop_assert!(lcs_len(&a, &b) <= bound);
            prop_assert!(unigram_overlap(&a, &b) <= bound);
        }

        #[test]
        fn splitting_loses_no_tokens(words in prop::collection::vec("[A-Za-z0-9]{1,6}[.!?,]?", 0..40)) {
            let text = words.join(" ");
            let splitter = RuleSplitter::default();
            let rejoined: Vec<String> = splitter
                .split(&text)
                .into_iter()
                .flat_map(|s| tokenize(s).into_inner())
                .collect();
            prop_assert_eq!(rejoined, tokenize(&text).into_inner());
        }
    }
}
