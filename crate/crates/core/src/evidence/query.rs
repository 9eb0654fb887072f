use serde::{Deserialize, Serialize};

use super::EvidenceError;
use crate::textproc::first_words;

/// Web-search APIs cap query length; queries keep at most this many words.
pub const DEFAULT_QUERY_WORDS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryOrigin {
    /// headline followed by the claim sentences
    P1P2,
    /// headline followed by the summary
    P3,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    text: String,
    origin: QueryOrigin,
}

impl Query {
    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn origin(&self) -> QueryOrigin {
        self.origin
    }

    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// `headline ⊕ second`, cut to the first `word_limit` whitespace words.
pub fn build_query(
    headline: &str,
    claims_or_summary: &str,
    origin: QueryOrigin,
    word_limit: usize,
) -> Result<Query, EvidenceError> {
    if headline.trim().is_empty() {
        return Err(EvidenceError::EmptyHeadline);
    }
    let joined = format!("{} {}", headline.trim(), claims_or_summary.trim());
    let text = first_words(&joined, word_limit);
    if text.is_empty() {
        return Err(EvidenceError::EmptyQuery);
    }
    Ok(Query { text, origin })
}
