use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::filter::{date_window, is_credible, CredibleDomainList, DEFAULT_WINDOW_MONTHS};
use super::provider::{result_domain, search, SearchProvider, SearchResult};
use super::query::Query;
use super::EvidenceError;
use crate::claimrank::{by_distance_then_position, rank_texts};
use crate::corpus::Article;
use crate::encode::EncoderBackend;
use crate::textproc::SentenceSplitter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSettings {
    pub max_articles: usize,
    pub max_sentences: usize,
    pub window_months: u32,
}

impl Default for EvidenceSettings {
    fn default() -> Self {
        Self {
            max_articles: 3,
            max_sentences: 3,
            window_months: DEFAULT_WINDOW_MONTHS,
        }
    }
}

/// How the publication-date filter was applied to an article's candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DateCheck {
    Applied,
    /// The article has no publication date; candidates pass the date check.
    NotApplicable,
}

/// Per-candidate filter outcome, kept for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAudit {
    pub url: String,
    pub domain: String,
    pub published: Option<NaiveDate>,
    pub provider_rank: usize,
    pub credible: bool,
    pub in_window: bool,
    pub has_text: bool,
    pub kept: bool,
}

/// A search result that passed both filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceArticle {
    result: SearchResult,
}

impl EvidenceArticle {
    pub fn result(&self) -> &SearchResult {
        &self.result
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSentence {
    pub text: String,
    pub distance: f64,
    pub source_url: String,
    /// Position of the source among the kept evidence articles.
    pub article_index: usize,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub articles: Vec<EvidenceArticle>,
    pub sentences: Vec<EvidenceSentence>,
    pub concatenated: String,
}

impl EvidenceSet {
    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatherOutcome {
    pub evidence: EvidenceSet,
    pub candidates: Vec<CandidateAudit>,
    pub date_check: DateCheck,
}

/// Search, filter by credibility and date window, keep the first
/// `max_articles` survivors, then pool their sentences and take the global
/// top `max_sentences` by distance to `claim_text`.
///
/// A candidate also needs at least one sentence of body text to survive.
#[allow(clippy::too_many_arguments)]
pub fn gather_evidence(
    article: &Article,
    claim_text: &str,
    query: &Query,
    provider: &dyn SearchProvider,
    credible: &CredibleDomainList,
    backend: &dyn EncoderBackend,
    splitter: &dyn SentenceSplitter,
    settings: &EvidenceSettings,
) -> Result<GatherOutcome, EvidenceError> {
    let results = search(provider, query)?;
    let date_check = if article.published.is_some() {
        DateCheck::Applied
    } else {
        DateCheck::NotApplicable
    };

    let mut candidates = Vec::with_capacity(results.len());
    let mut survivors: Vec<(SearchResult, Vec<&str>)> = Vec::new();
    let bodies: Vec<Vec<&str>> = results.iter().map(|r| splitter.split(&r.body)).collect();
    for (result, sentences) in results.iter().zip(bodies) {
        let domain = result_domain(result);
        let credible_ok = is_credible(&domain, credible);
        let in_window = match (article.published, result.published) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(e)) => date_window(a, e, settings.window_months),
        };
        let has_text = !sentences.is_empty();
        let kept = credible_ok && in_window && has_text && survivors.len() < settings.max_articles;
        candidates.push(CandidateAudit {
            url: result.url.clone(),
            domain,
            published: result.published,
            provider_rank: result.provider_rank,
            credible: credible_ok,
            in_window,
            has_text,
            kept,
        });
        if kept {
            survivors.push((result.clone(), sentences));
        }
    }

    let mut pooled: Vec<(f64, usize, usize, String)> = Vec::new();
    for (article_index, (_, sentences)) in survivors.iter().enumerate() {
        for r in rank_texts(claim_text, sentences, backend)? {
            pooled.push((r.distance, article_index, r.index, r.text));
        }
    }
    pooled.sort_by(|a, b| {
        by_distance_then_position((a.0, a.1), (b.0, b.1)).then(a.2.cmp(&b.2))
    });
    let sentences: Vec<EvidenceSentence> = pooled
        .into_iter()
        .take(settings.max_sentences)
        .map(|(distance, article_index, sentence_index, text)| EvidenceSentence {
            source_url: survivors[article_index].0.url.clone(),
            text,
            distance,
            article_index,
            sentence_index,
        })
        .collect();
    let concatenated = sentences
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");

    Ok(GatherOutcome {
        evidence: EvidenceSet {
            articles: survivors
                .into_iter()
                .map(|(result, _)| EvidenceArticle { result })
                .collect(),
            sentences,
            concatenated,
        },
        candidates,
        date_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Dataset;
    use crate::encode::ReferenceEncoder;
    use crate::evidence::provider::FixtureProvider;
    use crate::evidence::query::{build_query, QueryOrigin};
    use crate::textproc::RuleSplitter;

    fn article(published: Option<&str>) -> Article {
        Article {
            id: "a".into(),
            headline: "Dam failure".into(),
            body: "The dam failed. Many fled.".into(),
            published: published.map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").unwrap()),
            source_domain: None,
            raw_label: "false".into(),
            label: None,
            dataset: Dataset::Fixture,
            reference_claim: None,
        }
    }

    fn result(i: usize, domain: &str, published: Option<&str>, body: &str) -> SearchResult {
        SearchResult {
            url: format!("https://{domain}/story{i}"),
            domain: domain.into(),
            published: published.map(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").unwrap()),
            title: format!("story {i}"),
            body: body.into(),
            provider_rank: i + 1,
        }
    }

    fn run(article: &Article, claim: &str, results: Vec<SearchResult>) -> GatherOutcome {
        let mut provider = FixtureProvider::default();
        let query = build_query(&article.headline, claim, QueryOrigin::P1P2, 40).unwrap();
        provider.insert(query.text(), results);
        let list = CredibleDomainList::new(["reuters.com", "apnews.com"]).unwrap();
        gather_evidence(
            article,
            claim,
            &query,
            &provider,
            &list,
            &ReferenceEncoder::default(),
            &RuleSplitter::default(),
            &EvidenceSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn non_credible_results_give_empty_set() {
        let a = article(Some("2017-06-15"));
        let out = run(
            &a,
            "The dam failed.",
            vec![
                result(0, "fakenews.example", Some("2017-06-16"), "The dam failed."),
                result(1, "blog.example.org", Some("2017-06-16"), "The dam failed."),
            ],
        );
        assert!(out.evidence.is_empty());
        assert!(out.evidence.sentences.is_empty());
        assert_eq!(out.evidence.concatenated, "");
        assert!(out.candidates.iter().all(|c| !c.credible && !c.kept));
    }

    #[test]
    fn keeps_first_three_survivors() {
        let a = article(Some("2017-06-15"));
        let results = (0..5)
            .map(|i| result(i, "reuters.com", Some("2017-07-01"), &format!("Report number {i} here.")))
            .collect();
        let out = run(&a, "The dam failed.", results);
        let urls: Vec<&str> = out.evidence.articles.iter().map(|e| e.result().url.as_str()).collect();
        assert_eq!(
            urls,
            ["https://reuters.com/story0", "https://reuters.com/story1", "https://reuters.com/story2"]
        );
        assert_eq!(out.evidence.sentences.len(), 3);
        assert_eq!(out.candidates.iter().filter(|c| c.kept).count(), 3);
    }

    #[test]
    fn identical_sentence_is_first_evidence() {
        let a = article(Some("2017-06-15"));
        let out = run(
            &a,
            "The dam failed near the town.",
            vec![
                result(0, "apnews.com", Some("2017-06-20"), "Rain continued. Officials met."),
                result(1, "reuters.com", Some("2017-06-20"), "Crowds gathered. The dam failed near the town."),
            ],
        );
        let e1 = &out.evidence.sentences[0];
        assert_eq!(e1.text, "The dam failed near the town.");
        assert!(e1.distance < 1e-12);
        assert_eq!((e1.article_index, e1.sentence_index), (1, 1));
        assert_eq!(e1.source_url, "https://reuters.com/story1");
        assert!(out.evidence.concatenated.starts_with("The dam failed near the town."));
    }

    #[test]
    fn date_rules() {
        let results = vec![
            result(0, "reuters.com", None, "Undated story."),
            result(1, "reuters.com", Some("2018-01-01"), "Late story."),
            result(2, "reuters.com", Some("2017-09-15"), "Edge story."),
        ];
        let dated = run(&article(Some("2017-06-15")), "Story.", results.clone());
        assert_eq!(dated.date_check, DateCheck::Applied);
        let flags: Vec<bool> = dated.candidates.iter().map(|c| c.in_window).collect();
        assert_eq!(flags, [false, false, true]);
        assert_eq!(dated.evidence.articles.len(), 1);

        let undated = run(&article(None), "Story.", results);
        assert_eq!(undated.date_check, DateCheck::NotApplicable);
        assert_eq!(undated.evidence.articles.len(), 3);
    }

    #[test]
    fn empty_body_candidates_skipped() {
        let out = run(
            &article(None),
            "Story.",
            vec![result(0, "reuters.com", None, "  "), result(1, "reuters.com", None, "Real text.")],
        );
        assert_eq!(out.evidence.articles.len(), 1);
        assert!(!out.candidates[0].has_text);
    }
}
