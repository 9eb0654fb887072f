//! Regenerates `fixtures/search_results.json` for the bundled corpus.
//!
//! Queries are computed by running each pipeline variant with the default
//! configuration against an empty provider, so the table always matches what
//! `run --provider fixture` will ask for. Run after changing ranking, query
//! or summarizer behaviour:
//!
//! ```text
//! cargo run -p claimcheck --example make_fixtures
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{Days, Months, NaiveDate};
use claimcheck::corpus::{fixture_corpus, Article};
use claimcheck::evidence::{normalize_query_key, FixtureProvider};
use claimcheck::pipeline::{Config, PipelineVariant, ProviderKind};
use serde_json::{json, Value};

/// Every result is from an untrusted site.
const ONLY_UNTRUSTED: &[&str] = &["fx03"];
/// Credible results, but all far outside the date window.
const ONLY_STALE: &[&str] = &["fx07"];
/// Articles whose headline-plus-summary query still finds coverage.
const P3_ANSWERED: &[&str] = &["fx01", "fx02", "fx04", "fx05", "fx06", "fx08"];

fn entry(url: String, published: Option<NaiveDate>, title: &str, body: String) -> Value {
    json!({ "url": url, "published": published, "title": title, "body": body })
}

fn results_for(a: &Article) -> Vec<Value> {
    let claim = a.reference_claim.clone().unwrap_or_else(|| a.headline.clone());
    let lead = a.body.split(". ").next().unwrap_or_default().trim_end_matches('.');
    let near = a.published.and_then(|d| d.checked_add_days(Days::new(12)));
    let stale = a.published.and_then(|d| d.checked_sub_months(Months::new(9)));
    let id = &a.id;

    let fresh = entry(
        format!("https://www.reuters.com/fact-check/{id}"),
        near,
        &a.headline,
        format!("{claim} Reporters reviewed the statement in detail. {lead}. Several experts were contacted for comment."),
    );
    let untrusted = entry(
        format!("https://viral-news.example/{id}"),
        near,
        &a.headline,
        format!("Shocking news: {claim} Share this before it is deleted."),
    );
    let old = entry(
        format!("https://apnews.com/archive/{id}"),
        stale,
        &a.headline,
        format!("An earlier report on a related topic. {lead}."),
    );
    let second = entry(
        format!("https://www.bbc.co.uk/news/{id}"),
        near,
        &a.headline,
        format!("{lead}. Officials declined to comment further. {claim}"),
    );

    if ONLY_UNTRUSTED.contains(&id.as_str()) {
        vec![untrusted, entry(format!("https://rumor-mill.example/{id}"), near, &a.headline, claim)]
    } else if ONLY_STALE.contains(&id.as_str()) {
        vec![old.clone(), untrusted, old]
    } else {
        vec![untrusted, fresh, old, second]
    }
}

fn main() -> anyhow::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/search_results.json"));

    let cfg = Config::default();
    let mut pipeline = cfg.build_pipeline(ProviderKind::Fixture, true)?;
    pipeline.provider = Box::new(FixtureProvider::default());

    let mut queries: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for article in fixture_corpus()? {
        for variant in PipelineVariant::ALL {
            if variant == PipelineVariant::P3HeadlinePlusSummary && !P3_ANSWERED.contains(&article.id.as_str()) {
                continue;
            }
            let record = pipeline.process(&article, variant);
            let query = record
                .query
                .ok_or_else(|| anyhow::anyhow!("{}: no query ({:?})", article.id, record.error))?;
            queries.insert(normalize_query_key(&query.text), results_for(&article));
        }
    }
    let file = json!({ "version": 1, "queries": queries });
    std::fs::write(&out, serde_json::to_string_pretty(&file)? + "\n")?;
    println!("wrote {} queries to {}", queries.len(), out.display());
    Ok(())
}
