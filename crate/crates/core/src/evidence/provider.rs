use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::filter::registrable_domain;
use super::query::Query;

/// Results kept per query.
pub const MAX_RESULTS: usize = 35;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchErrorKind {
    Unreachable,
    RateLimited,
    QuotaExceeded,
    Unauthorized,
    Malformed,
    Config,
    Cache,
}

impl SearchErrorKind {
    pub fn is_retryable(self) -> bool {
        matches!(self, SearchErrorKind::Unreachable | SearchErrorKind::RateLimited)
    }
}

impl fmt::Display for SearchErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SearchErrorKind::Unreachable => "provider unreachable",
            SearchErrorKind::RateLimited => "rate limited",
            SearchErrorKind::QuotaExceeded => "quota exceeded",
            SearchErrorKind::Unauthorized => "unauthorized",
            SearchErrorKind::Malformed => "malformed response",
            SearchErrorKind::Config => "configuration error",
            SearchErrorKind::Cache => "cache error",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error)]
#[error("search failed ({kind}, {}): {message}", if kind.is_retryable() { "retryable" } else { "fatal" })]
pub struct SearchError {
    pub kind: SearchErrorKind,
    pub message: String,
}

impl SearchError {
    pub fn new(kind: SearchErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn is_retryable(&self) -> bool {
        self.kind.is_retryable()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub url: String,
    pub domain: String,
    pub published: Option<NaiveDate>,
    pub title: String,
    pub body: String,
    /// 1-based position in the provider response.
    pub provider_rank: usize,
}

pub trait SearchProvider: Send + Sync {
    fn name(&self) -> &str;
    fn fetch(&self, query: &Query) -> Result<Vec<SearchResult>, SearchError>;
}

/// Queries `provider`, keeps the first [`MAX_RESULTS`] in provider order and
/// rejects responses with duplicate ranks.
pub fn search(
    provider: &dyn SearchProvider,
    query: &Query,
) -> Result<Vec<SearchResult>, SearchError> {
    let mut results = provider.fetch(query)?;
    let mut seen = HashSet::new();
    if let Some(dup) = results.iter().find(|r| !seen.insert(r.provider_rank)) {
        return Err(SearchError::new(
            SearchErrorKind::Malformed,
            format!("duplicate provider rank {}", dup.provider_rank),
        ));
    }
    results.truncate(MAX_RESULTS);
    Ok(results)
}

/// Fixture lookup key: lowercase with whitespace collapsed.
pub fn normalize_query_key(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct FixtureEntry {
    pub url: String,
    #[serde(default)]
    pub domain: Option<String>,
    #[serde(default)]
    pub published: Option<NaiveDate>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub(crate) struct FixtureFile {
    pub version: u32,
    pub queries: BTreeMap<String, Vec<FixtureEntry>>,
}

/// Offline provider answering from a query → results table.
#[derive(Debug, Clone, Default)]
pub struct FixtureProvider {
    table: BTreeMap<String, Vec<SearchResult>>,
}

impl FixtureProvider {
    pub fn parse(contents: &str) -> Result<Self, SearchError> {
        let file: FixtureFile = serde_json::from_str(contents)
            .map_err(|e| SearchError::new(SearchErrorKind::Config, format!("bad fixture: {e}")))?;
        let mut provider = Self::default();
        for (query, entries) in file.queries {
            let results = entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    let domain = e
                        .domain
                        .map(|d| d.to_lowercase())
                        .or_else(|| url::Url::parse(&e.url).ok()?.host_str().map(str::to_string))
                        .unwrap_or_default();
                    SearchResult {
                        url: e.url,
                        domain,
                        published: e.published,
                        title: e.title,
                        body: e.body,
                        provider_rank: i + 1,
                    }
                })
                .collect();
            provider.insert(&query, results);
        }
        Ok(provider)
    }

    pub fn from_file(path: &Path) -> Result<Self, SearchError> {
        let contents = std::fs::read_to_string(path).map_err(|e| {
            SearchError::new(SearchErrorKind::Config, format!("{}: {e}", path.display()))
        })?;
        Self::parse(&contents)
    }

    pub fn insert(&mut self, query: &str, results: Vec<SearchResult>) {
        self.table.insert(normalize_query_key(query), results);
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn contains(&self, query: &str) -> bool {
        self.table.contains_key(&normalize_query_key(query))
    }
}

impl SearchProvider for FixtureProvider {
    fn name(&self) -> &str {
        "fixture"
    }

    fn fetch(&self, query: &Query) -> Result<Vec<SearchResult>, SearchError> {
        Ok(self
            .table
            .get(&normalize_query_key(query.text()))
            .cloned()
            .unwrap_or_default())
    }
}

/// Registrable domain of a result, falling back to its URL host.
pub(crate) fn result_domain(result: &SearchResult) -> String {
    if !result.domain.is_empty() {
        return result.domain.clone();
    }
    registrable_domain(&result.url).unwrap_or_default()
}
