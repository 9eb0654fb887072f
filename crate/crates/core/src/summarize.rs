//! Summarizer backends and the token-window wrapper applied to all of them.
//!
//! Token counts here are [`crate::textproc`] tokens, not model subwords.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::{token_count, truncate_to_tokens, RuleSplitter, SentenceSplitter};

pub const DEFAULT_MIN_TOKENS: usize = 60;
pub const DEFAULT_MAX_TOKENS: usize = 180;

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("cannot summarize an empty body")]
    EmptyBody,
    #[error("invalid token window: min {min} > max {max} or max is zero")]
    InvalidWindow { min: usize, max: usize },
    #[error("summarizer {backend} produced an empty summary")]
    EmptySummary { backend: String },
    #[error("summarizer backend {backend} failed: {message}")]
    Backend { backend: String, message: String },
}

pub trait SummarizerBackend: Send + Sync {
    fn name(&self) -> &str;
    fn min_tokens(&self) -> usize;
    fn max_tokens(&self) -> usize;
    /// Raw backend output; callers go through [`summarize`].
    fn generate(&self, body: &str) -> Result<String, SummarizeError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub text: String,
    /// Set when the backend overran `max_tokens` and the output was cut.
    pub truncated: bool,
}

/// Runs `backend` and enforces the `max_tokens` ceiling on its output.
pub fn summarize(backend: &dyn SummarizerBackend, body: &str) -> Result<Summary, SummarizeError> {
    if body.trim().is_empty() {
        return Err(SummarizeError::EmptyBody);
    }
    let (min, max) = (backend.min_tokens(), backend.max_tokens());
    if min > max || max == 0 {
        return Err(SummarizeError::InvalidWindow { min, max });
    }
    let raw = backend.generate(body)?;
    let n = token_count(&raw);
    if n == 0 {
        return Err(SummarizeError::EmptySummary {
            backend: backend.name().to_string(),
        });
    }
    if n > max {
        log::warn!(
            "summarizer {} returned {n} tokens, truncating to {max}",
            backend.name()
        );
        return Ok(Summary {
            text: truncate_to_tokens(&raw, max).to_string(),
            truncated: true,
        });
    }
    let floor = min.min(token_count(body));
    if n < floor {
        log::warn!(
            "summarizer {} returned {n} tokens, below the {floor}-token floor",
            backend.name()
        );
    }
    Ok(Summary {
        text: raw.trim().to_string(),
        truncated: false,
    })
}

/// Leading whole sentences while the running token count stays within
/// `max_tokens`; a first sentence that alone exceeds the budget is cut at
/// `max_tokens` tokens.
pub fn lead_fallback_summarize(
    splitter: &dyn SentenceSplitter,
    body: &str,
    max_tokens: usize,
) -> Result<String, SummarizeError> {
    if body.trim().is_empty() {
        return Err(SummarizeError::EmptyBody);
    }
    let sentences = splitter.split(body);
    let mut kept: Vec<&str> = Vec::new();
    let mut total = 0;
    for s in &sentences {
        let n = token_count(s);
        if total + n > max_tokens {
            break;
        }
        total += n;
        kept.push(s);
    }
    if kept.is_empty() {
        let first = sentences.first().ok_or(SummarizeError::EmptyBody)?;
        return Ok(truncate_to_tokens(first, max_tokens).to_string());
    }
    Ok(kept.join(" "))
}

/// Deterministic extractive stand-in for an abstractive model.
pub struct LeadSummarizer {
    splitter: Box<dyn SentenceSplitter>,
    min_tokens: usize,
    max_tokens: usize,
}

impl LeadSummarizer {
    pub fn new(
        splitter: Box<dyn SentenceSplitter>,
        min_tokens: usize,
        max_tokens: usize,
    ) -> Result<Self, SummarizeError> {
        if min_tokens > max_tokens || max_tokens == 0 {
            return Err(SummarizeError::InvalidWindow {
                min: min_tokens,
                max: max_tokens,
            });
        }
        Ok(Self {
            splitter,
            min_tokens,
            max_tokens,
        })
    }
}

impl Default for LeadSummarizer {
    fn default() -> Self {
        Self {
            splitter: Box::new(RuleSplitter::default()),
            min_tokens: DEFAULT_MIN_TOKENS,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl SummarizerBackend for LeadSummarizer {
    fn name(&self) -> &str {
        "lead"
    }

    fn min_tokens(&self) -> usize {
        self.min_tokens
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn generate(&self, body: &str) -> Result<String, SummarizeError> {
        lead_fallback_summarize(self.splitter.as_ref(), body, self.max_tokens)
    }
}

#[derive(Serialize)]
struct SummarizeRequest<'a> {
    model: &'a str,
    text: &'a str,
    min_tokens: usize,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct SummarizeResponse {
    summary: String,
}

/// Remote summarization service (e.g. a hosted t5-base).
///
/// Request: `{"model", "text", "min_tokens", "max_tokens"}`;
/// response: `{"summary": ".."}`.
pub struct HttpSummarizer {
    endpoint: String,
    model: String,
    min_tokens: usize,
    max_tokens: usize,
    client: reqwest::blocking::Client,
}

impl HttpSummarizer {
    pub fn new(
        endpoint: &str,
        model: &str,
        min_tokens: usize,
        max_tokens: usize,
    ) -> Result<Self, SummarizeError> {
        if min_tokens > max_tokens || max_tokens == 0 {
            return Err(SummarizeError::InvalidWindow {
                min: min_tokens,
                max: max_tokens,
            });
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| SummarizeError::Backend {
                backend: model.to_string(),
                message: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            min_tokens,
            max_tokens,
            client,
        })
    }
}

impl SummarizerBackend for HttpSummarizer {
    fn name(&self) -> &str {
        &self.model
    }

    fn min_tokens(&self) -> usize {
        self.min_tokens
    }

    fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn generate(&self, body: &str) -> Result<String, SummarizeError> {
        let fail = |message: String| SummarizeError::Backend {
            backend: self.model.clone(),
            message,
        };
        let resp: SummarizeResponse = self
            .client
            .post(&self.endpoint)
            .json(&SummarizeRequest {
                model: &self.model,
                text: body,
                min_tokens: self.min_tokens,
                max_tokens: self.max_tokens,
            })
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| fail(e.to_string()))?
            .json()
            .map_err(|e| fail(format!("malformed response: {e}")))?;
        Ok(resp.summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sentence(prefix: &str, n: usize) -> String {
        let words: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
        format!("{}.", words.join(" "))
    }

    fn body(lengths: &[usize]) -> String {
        lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| sentence(&format!("S{i}w"), n))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn lead_keeps_whole_sentences_within_budget() {
        let splitter = RuleSplitter::default();
        let b = body(&[50, 50, 50]);
        let s = lead_fallback_summarize(&splitter, &b, 180).unwrap();
        assert_eq!(s, b);
        assert_eq!(token_count(&s), 150);

        let b = body(&[100, 100]);
        let s = lead_fallback_summarize(&splitter, &b, 180).unwrap();
        assert_eq!(s, sentence("S0w", 100));
    }

    #[test]
    fn lead_truncates_single_oversized_sentence() {
        let splitter = RuleSplitter::default();
        let b = body(&[300]);
        let s = lead_fallback_summarize(&splitter, &b, 180).unwrap();
        assert_eq!(token_count(&s), 180);
        assert!(b.starts_with(&s));
        assert!(s.ends_with("S0w179"));
    }

    #[test]
    fn short_body_returned_whole() {
        let b = body(&[40]);
        let s = summarize(&LeadSummarizer::default(), &b).unwrap();
        assert_eq!(s.text, b);
        assert!(!s.truncated);
    }

    #[test]
    fn long_body_lands_in_window() {
        let b = body(&[20; 50]);
        assert_eq!(token_count(&b), 1000);
        let s = summarize(&LeadSummarizer::default(), &b).unwrap();
        let n = token_count(&s.text);
        assert!((60..=180).contains(&n), "{n}");
        assert_eq!(s, summarize(&LeadSummarizer::default(), &b).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            summarize(&LeadSummarizer::default(), "  "),
            Err(SummarizeError::EmptyBody)
        ));
        assert!(LeadSummarizer::new(Box::new(RuleSplitter::default()), 10, 5).is_err());
    }

    struct Verbose;

    impl SummarizerBackend for Verbose {
        fn name(&self) -> &str {
            "verbose"
        }
        fn min_tokens(&self) -> usize {
            2
        }
        fn max_tokens(&self) -> usize {
            3
        }
        fn generate(&self, _body: &str) -> Result<String, SummarizeError> {
            Ok("one, two three four five".into())
        }
    }

    #[test]
    fn wrapper_truncates_and_flags_overlong_output() {
        let s = summarize(&Verbose, "body text").unwrap();
        assert_eq!(s.text, "one, two three");
        assert!(s.truncated);
    }

    proptest! {
        #[test]
        fn fallback_is_sentence_prefix_within_budget(
            lengths in prop::collection::vec(1usize..60, 1..12),
            max in 1usize..200,
        ) {
            let b = body(&lengths);
            let s = lead_fallback_summarize(&RuleSplitter::default(), &b, max).unwrap();
            prop_assert!(token_count(&s) <= max);
            prop_assert!(b.starts_with(&s));
            if lengths[0] <= max {
                // whole-sentence prefix
                prop_assert!(s.ends_with('.'));
            }
        }
    }
}
