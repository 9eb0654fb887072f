use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Months, NaiveDate};

use super::EvidenceError;

pub const DEFAULT_WINDOW_MONTHS: u32 = 3;

/// Inclusive window of `months` calendar months either side of `center`.
/// Days past the end of the target month clamp to its last day.
pub fn window_bounds(center: NaiveDate, months: u32) -> (NaiveDate, NaiveDate) {
    let lower = center
        .checked_sub_months(Months::new(months))
        .unwrap_or(NaiveDate::MIN);
    let upper = center
        .checked_add_months(Months::new(months))
        .unwrap_or(NaiveDate::MAX);
    (lower, upper)
}

pub fn date_window(article_date: NaiveDate, evidence_date: NaiveDate, months: u32) -> bool {
    let (lower, upper) = window_bounds(article_date, months);
    lower <= evidence_date && evidence_date <= upper
}

fn host_of(input: &str) -> Option<String> {
    let s = input.trim().to_lowercase();
    if s.is_empty() {
        return None;
    }
    let host = if s.contains("://") {
        url::Url::parse(&s).ok()?.host_str()?.to_string()
    } else {
        let end = s.find(['/', '?', '#']).unwrap_or(s.len());
        let h = &s[..end];
        // strip a port
        match h.rsplit_once(':') {
            Some((name, port)) if port.chars().all(|c| c.is_ascii_digit()) => name.to_string(),
            _ => h.to_string(),
        }
    };
    let host = host.trim_end_matches('.').to_string();
    let valid = !host.is_empty()
        && host.split('.').all(|label| {
            !label.is_empty()
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        });
    valid.then_some(host)
}

/// Public suffix plus one label, lowercased. `None` for IPs, bare suffixes
/// and anything that is not a hostname.
pub fn registrable_domain(input: &str) -> Option<String> {
    let host = host_of(input)?;
    if host.parse::<std::net::Ipv4Addr>().is_ok() {
        return None;
    }
    psl::domain_str(&host).map(str::to_string)
}

/// Allowlist of credible registrable domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CredibleDomainList {
    domains: BTreeSet<String>,
}

impl CredibleDomainList {
    pub fn new<I, S>(entries: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut domains = BTreeSet::new();
        for e in entries {
            let e = e.as_ref().trim().to_lowercase();
            if e.contains("://") || e.contains('/') {
                return Err(EvidenceError::InvalidDomainEntry(e));
            }
            let d = registrable_domain(&e).ok_or(EvidenceError::InvalidDomainEntry(e))?;
            domains.insert(d);
        }
        if domains.is_empty() {
            return Err(EvidenceError::EmptyDomainList);
        }
        Ok(Self { domains })
    }

    /// One domain per line; `#` starts a comment.
    pub fn parse(contents: &str) -> Result<Self, EvidenceError> {
        Self::new(
            contents
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, EvidenceError> {
        let contents = std::fs::read_to_string(path).map_err(|source| EvidenceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&contents)
    }

    pub fn contains(&self, registrable: &str) -> bool {
        self.domains.contains(registrable)
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

pub fn is_credible(domain: &str, list: &CredibleDomainList) -> bool {
    match registrable_domain(domain) {
        Some(d) => list.contains(&d),
        None => {
            log::warn!("cannot parse domain {domain:?}; treating as not credible");
            false
        }
    }
}
