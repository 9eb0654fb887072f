//! Evidence gathering: bounded web queries, a search-provider interface with
//! fixture and live implementations, date/credibility filters and evidence
//! sentence selection.

mod filter;
mod gather;
mod live;
mod provider;
mod query;

pub use filter::{
    date_window, is_credible, registrable_domain, window_bounds, CredibleDomainList,
    DEFAULT_WINDOW_MONTHS,
};
pub use gather::{
    gather_evidence, CandidateAudit, DateCheck, EvidenceArticle, EvidenceSentence, EvidenceSet,
    EvidenceSettings, GatherOutcome,
};
pub use live::{LiveProvider, LiveProviderConfig, RateLimiter, ResponseCache};
pub use provider::{
    normalize_query_key, search, FixtureProvider, SearchError, SearchErrorKind, SearchProvider,
    SearchResult, MAX_RESULTS,
};
pub use query::{build_query, Query, QueryOrigin, DEFAULT_QUERY_WORDS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("headline is empty")]
    EmptyHeadline,
    #[error("query is empty")]
    EmptyQuery,
    #[error("credible-domain list is empty")]
    EmptyDomainList,
    #[error("invalid credible-domain entry {0:?}: expected a bare lowercase domain")]
    InvalidDomainEntry(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Rank(#[from] crate::claimrank::RankError),
}
