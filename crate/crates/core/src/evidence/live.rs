//! HTTP web-search provider (Bing Web Search v7 response shape) with an
//! immutable on-disk response cache and a shared rate limiter.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::filter::registrable_domain;
use super::provider::{SearchError, SearchErrorKind, SearchProvider, SearchResult, MAX_RESULTS};
use super::query::Query;

/// Bounds concurrent requests and spaces request starts at least
/// `1 / requests_per_second` apart.
#[derive(Debug)]
pub struct RateLimiter {
    max_in_flight: usize,
    min_interval: Duration,
    state: Mutex<LimiterState>,
    freed: Condvar,
}

#[derive(Debug)]
struct LimiterState {
    in_flight: usize,
    next_start: Instant,
}

pub struct Permit<'a> {
    limiter: &'a RateLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut st = self.limiter.state.lock().unwrap_or_else(|e| e.into_inner());
        st.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

impl RateLimiter {
    pub fn new(max_in_flight: usize, requests_per_second: f64) -> Self {
        let min_interval = if requests_per_second > 0.0 && requests_per_second.is_finite() {
            Duration::from_secs_f64(1.0 / requests_per_second)
        } else {
            Duration::ZERO
        };
        Self {
            max_in_flight: max_in_flight.max(1),
            min_interval,
            state: Mutex::new(LimiterState {
                in_flight: 0,
                next_start: Instant::now(),
            }),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        while st.in_flight >= self.max_in_flight {
            st = self.freed.wait(st).unwrap_or_else(|e| e.into_inner());
        }
        st.in_flight += 1;
        let now = Instant::now();
        let start = st.next_start.max(now);
        st.next_start = start + self.min_interval;
        drop(st);
        if start > now {
            std::thread::sleep(start - now);
        }
        Permit { limiter: self }
    }
}

/// Write-once response cache keyed by SHA-256 of `provider \n query`.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(provider: &str, query: &str) -> String {
        let mut h = Sha256::new();
        h.update(provider.as_bytes());
        h.update(b"\n");
        h.update(query.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<Vec<u8>> {
        std::fs::read(self.path(key)).ok()
    }

    /// Stores `bytes` unless an entry already exists; existing entries are
    /// never replaced.
    pub fn put(&self, key: &str, bytes: &[u8]) -> Result<(), SearchError> {
        let cache_err = |e: std::io::Error| SearchError::new(SearchErrorKind::Cache, e.to_string());
        let target = self.path(key);
        if target.exists() {
            return Ok(());
        }
        std::fs::create_dir_all(&self.dir).map_err(cache_err)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(cache_err)?;
        tmp.write_all(bytes).map_err(cache_err)?;
        match tmp.persist_noclobber(&target) {
            Ok(_) => Ok(()),
            Err(_) if target.exists() => Ok(()),
            Err(e) => Err(cache_err(e.error)),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Debug, Clone)]
pub struct LiveProviderConfig {
    pub endpoint: String,
    /// Name of the environment variable holding the subscription key.
    pub api_key_env: String,
    pub count: usize,
    pub cache_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub requests_per_second: f64,
    pub max_retries: u32,
    pub timeout: Duration,
}

impl Default for LiveProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.bing.microsoft.com/v7.0/search".into(),
            api_key_env: "BING_SEARCH_KEY".into(),
            count: MAX_RESULTS,
            cache_dir: None,
            max_in_flight: 4,
            requests_per_second: 3.0,
            max_retries: 2,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Deserialize)]
struct BingResponse {
    #[serde(rename = "webPages")]
    web_pages: Option<BingPages>,
}

#[derive(Deserialize)]
struct BingPages {
    #[serde(default)]
    value: Vec<BingPage>,
}

#[derive(Deserialize)]
struct BingPage {
    url: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    snippet: String,
    #[serde(rename = "datePublished", default)]
    date_published: Option<String>,
}

fn parse_date_prefix(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.get(..10)?, "%Y-%m-%d").ok()
}

pub(crate) fn parse_bing(bytes: &[u8]) -> Result<Vec<SearchResult>, SearchError> {
    let resp: BingResponse = serde_json::from_slice(bytes)
        .map_err(|e| SearchError::new(SearchErrorKind::Malformed, e.to_string()))?;
    Ok(resp
        .web_pages
        .map(|p| p.value)
        .unwrap_or_default()
        .into_iter()
        .enumerate()
        .map(|(i, page)| SearchResult {
            domain: registrable_domain(&page.url).unwrap_or_default(),
            published: page.date_published.as_deref().and_then(parse_date_prefix),
            url: page.url,
            title: page.name,
            body: page.snippet,
            provider_rank: i + 1,
        })
        .collect())
}

pub struct LiveProvider {
    config: LiveProviderConfig,
    api_key: Option<String>,
    cache: Option<ResponseCache>,
    limiter: RateLimiter,
    client: reqwest::blocking::Client,
}

impl LiveProvider {
    /// Reads the API key from the configured environment variable. A missing
    /// key is only an error once a request actually needs the network.
    pub fn new(config: LiveProviderConfig) -> Result<Self, SearchError> {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| SearchError::new(SearchErrorKind::Config, e.to_string()))?;
        Ok(Self {
            cache: config.cache_dir.clone().map(ResponseCache::new),
            limiter: RateLimiter::new(config.max_in_flight, config.requests_per_second),
            api_key,
            client,
            config,
        })
    }

    fn request(&self, query: &str) -> Result<Vec<u8>, SearchError> {
        let key = self.api_key.as_deref().ok_or_else(|| {
            SearchError::new(
                SearchErrorKind::Config,
                format!("environment variable {} is not set", self.config.api_key_env),
            )
        })?;
        let _permit = self.limiter.acquire();
        let count = self.config.count.min(MAX_RESULTS).to_string();
        let url = url::Url::parse_with_params(
            &self.config.endpoint,
            [("q", query), ("count", count.as_str())],
        )
        .map_err(|e| SearchError::new(SearchErrorKind::Config, format!("bad endpoint: {e}")))?;
        let resp = self
            .client
            .get(url)
            .header("Ocp-Apim-Subscription-Key", key)
            .send()
            .map_err(|e| SearchError::new(SearchErrorKind::Unreachable, e.to_string()))?;
        let status = resp.status();
        let kind = match status.as_u16() {
            200..=299 => None,
            429 => Some(SearchErrorKind::RateLimited),
            401 => Some(SearchErrorKind::Unauthorized),
            403 => Some(SearchErrorKind::QuotaExceeded),
            500..=599 => Some(SearchErrorKind::Unreachable),
            _ => Some(SearchErrorKind::Malformed),
        };
        if let Some(kind) = kind {
            return Err(SearchError::new(kind, format!("HTTP {status}")));
        }
        resp.bytes()
            .map(|b| b.to_vec())
            .map_err(|e| SearchError::new(SearchErrorKind::Unreachable, e.to_string()))
    }
}

impl SearchProvider for LiveProvider {
    fn name(&self) -> &str {
        "live"
    }

    fn fetch(&self, query: &Query) -> Result<Vec<SearchResult>, SearchError> {
        let cache_key = ResponseCache::key(self.name(), query.text());
        if let Some(bytes) = self.cache.as_ref().and_then(|c| c.get(&cache_key)) {
            return parse_bing(&bytes);
        }
        let mut attempt = 0;
        let bytes = loop {
            match self.request(query.text()) {
                Ok(b) => break b,
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    log::warn!("{e}; retry {attempt}/{}", self.config.max_retries);
                    std::thread::sleep(Duration::from_millis(250 * 2u64.pow(attempt)));
                }
                Err(e) => return Err(e),
            }
        };
        // parse before caching so malformed bodies are never persisted
        let results = parse_bing(&bytes)?;
        if let Some(cache) = &self.cache {
            cache.put(&cache_key, &bytes)?;
        }
        Ok(results)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn parses_bing_shape() {
        let body = br#"{"webPages":{"value":[
            {"name":"A","url":"https://www.reuters.com/a","snippet":"Alpha.","datePublished":"2017-07-01T10:00:00.0000000Z"},
            {"name":"B","url":"https://blog.example.org/b","snippet":"Beta."}
        ]}}"#;
        let r = parse_bing(body).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].domain, "reuters.com");
        assert_eq!(r[0].published, NaiveDate::from_ymd_opt(2017, 7, 1));
        assert_eq!(r[1].published, None);
        assert_eq!(r[1].provider_rank, 2);
        assert!(parse_bing(b"{}").unwrap().is_empty());
        assert!(matches!(
            parse_bing(b"<html>"),
            Err(SearchError { kind: SearchErrorKind::Malformed, .. })
        ));
    }

    #[test]
    fn cache_is_write_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path().join("c"));
        let k = ResponseCache::key("live", "q");
        assert_eq!(k.len(), 64);
        assert_ne!(k, ResponseCache::key("live", "q2"));
        assert!(cache.get(&k).is_none());
        cache.put(&k, b"first").unwrap();
        cache.put(&k, b"second").unwrap();
        assert_eq!(cache.get(&k).unwrap(), b"first");
    }

    #[test]
    fn limiter_spaces_requests() {
        let limiter = RateLimiter::new(8, 20.0);
        let start = Instant::now();
        for _ in 0..5 {
            drop(limiter.acquire());
        }
        assert!(start.elapsed() >= Duration::from_millis(190));
    }

    #[test]
    fn limiter_bounds_in_flight() {
        let limiter = Arc::new(RateLimiter::new(2, 0.0));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let (limiter, active, peak) = (limiter.clone(), active.clone(), peak.clone());
                std::thread::spawn(move || {
                    let _p = limiter.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(20));
                    active.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
