//! End-to-end orchestration of the three pipeline variants, per-article
//! trace records, the gist experiment and configuration loading.

mod config;
mod gist;
mod record;

pub use config::{
    ClaimsConfig, ClassifierConfig, Config, CorpusConfig, EncoderConfig, EvidenceConfig,
    PipelineConfig, ProviderConfig, ProviderKind, QueryConfig, SummarizerConfig, TextprocConfig,
    FIXTURE_CREDIBLE_DOMAINS, FIXTURE_SEARCH_RESULTS,
};
pub use gist::{run_gist_experiment, GistReport, GistRow, DEFAULT_GIST_SAMPLE};
pub use record::{
    examples_from_records, read_records, write_record, EvidenceArticleTrace, EvidenceTrace,
    InputMode, Prediction, PipelineRecord, QueryTrace, StageTimings, SummaryTrace, RECORD_SCHEMA,
};

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::claimrank::{rank_sentences, select_claims, InternalSignal, RankError, SignalKind};
use crate::corpus::{Article, VeracityLabel};
use crate::encode::{Concurrency, EncoderBackend};
use crate::evidence::{
    build_query, gather_evidence, CredibleDomainList, EvidenceError, EvidenceSettings, QueryOrigin,
};
use crate::evidence::SearchProvider;
use crate::summarize::{summarize, SummarizeError, SummarizerBackend};
use crate::textproc::SentenceSplitter;
use crate::veracity::{ClassifierBackend, VeracityError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no articles to process")]
    NoArticles,
    #[error("all {0} articles failed")]
    AllFailed(usize),
    #[error("no articles with a reference claim")]
    NoReferenceClaims,
    #[error("record error: {0}")]
    Record(String),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineVariant {
    /// Claims ranked against the headline.
    P1Headline,
    /// Claims ranked against a generated summary.
    P2Summary,
    /// No ranking; headline and summary go straight to retrieval.
    P3HeadlinePlusSummary,
}

impl PipelineVariant {
    pub const ALL: [PipelineVariant; 3] = [Self::P1Headline, Self::P2Summary, Self::P3HeadlinePlusSummary];

    pub fn short_name(self) -> &'static str {
        match self {
            Self::P1Headline => "p1",
            Self::P2Summary => "p2",
            Self::P3HeadlinePlusSummary => "p3",
        }
    }

    pub fn needs_summary(self) -> bool {
        !matches!(self, Self::P1Headline)
    }
}

impl std::str::FromStr for PipelineVariant {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "p1_headline" => Ok(Self::P1Headline),
            "p2" | "p2_summary" => Ok(Self::P2Summary),
            "p3" | "p3_headline_plus_summary" => Ok(Self::P3HeadlinePlusSummary),
            other => Err(PipelineError::Config(format!("unknown pipeline {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSettings {
    /// Claim sentences kept per article.
    pub claims: usize,
    pub min_sentence_tokens: usize,
    pub query_words: usize,
    pub evidence: EvidenceSettings,
    pub workers: usize,
    pub record_timings: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            claims: crate::claimrank::DEFAULT_CLAIM_COUNT,
            min_sentence_tokens: 0,
            query_words: crate::evidence::DEFAULT_QUERY_WORDS,
            evidence: EvidenceSettings::default(),
            workers: 4,
            record_timings: false,
        }
    }
}

/// Failure inside one article's processing; captured in its record.
#[derive(Debug, Error)]
enum ArticleError {
    #[error("summarize: {0}")]
    Summarize(#[from] SummarizeError),
    #[error("rank: {0}")]
    Rank(#[from] RankError),
    #[error("evidence: {0}")]
    Evidence(#[from] EvidenceError),
    #[error("classify: {0}")]
    Classify(#[from] VeracityError),
    #[error("{0} requires a summarizer backend")]
    NoSummarizer(&'static str),
}

/// Counts from one batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub total: usize,
    pub failed: usize,
    pub nei: usize,
}

/// Resolved backends plus settings.
pub struct Pipeline {
    pub encoder: Box<dyn EncoderBackend>,
    pub summarizer: Option<Box<dyn SummarizerBackend>>,
    pub provider: Box<dyn SearchProvider>,
    pub credible: CredibleDomainList,
    pub splitter: Box<dyn SentenceSplitter>,
    /// Optional: fills `prediction` on each record.
    pub classifier: Option<Box<dyn ClassifierBackend>>,
    pub settings: PipelineSettings,
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

impl Pipeline {
    fn workers(&self) -> usize {
        if self.encoder.concurrency() == Concurrency::SingleThreaded {
            1
        } else {
            self.settings.workers.max(1)
        }
    }

    /// Processes one article. Never fails: errors end up in the record.
    pub fn process(&self, article: &Article, variant: PipelineVariant) -> PipelineRecord {
        let mut record = PipelineRecord::empty(&article.id, variant, &article.headline);
        record.gold_label = article.label;
        record.content = article
            .body
            .split_whitespace()
            .take(crate::veracity::CONTENT_WORDS)
            .collect::<Vec<_>>()
            .join(" ");
        let start = Instant::now();
        let mut timings = StageTimings::default();
        if let Err(e) = self.fill(article, variant, &mut record, &mut timings) {
            log::warn!("article {} ({}): {e}", article.id, variant.short_name());
            record.error = Some(e.to_string());
            record.label = None;
        }
        if self.settings.record_timings {
            timings.total_ms = millis(start);
            record.timings = Some(timings);
        }
        record
    }

    fn fill(
        &self,
        article: &Article,
        variant: PipelineVariant,
        record: &mut PipelineRecord,
        timings: &mut StageTimings,
    ) -> Result<(), ArticleError> {
        let t = Instant::now();
        let summary = if variant.needs_summary() {
            let backend = self
                .summarizer
                .as_deref()
                .ok_or(ArticleError::NoSummarizer(variant.short_name()))?;
            let s = summarize(backend, &article.body)?;
            record.summary = Some(SummaryTrace {
                text: s.text.clone(),
                truncated: s.truncated,
            });
            Some(s.text)
        } else {
            None
        };
        timings.signal_ms = millis(t);

        let t = Instant::now();
        let query = match (variant, summary) {
            (PipelineVariant::P3HeadlinePlusSummary, Some(summary)) => {
                let joined = format!("{} {}", article.headline.trim(), summary.trim());
                record.signal = Some(InternalSignal::new(SignalKind::HeadlinePlusSummary, joined.clone())?);
                record.claim_text = joined;
                build_query(&article.headline, &summary, QueryOrigin::P3, self.settings.query_words)?
            }
            (_, summary) => {
                let signal = match summary {
                    Some(s) => InternalSignal::new(SignalKind::Summary, s)?,
                    None => InternalSignal::new(SignalKind::Headline, article.headline.clone())?,
                };
                let ranked = rank_sentences(
                    &article.body,
                    &signal,
                    self.encoder.as_ref(),
                    self.splitter.as_ref(),
                    self.settings.min_sentence_tokens,
                )?;
                let claims = select_claims(&ranked, self.settings.claims)?;
                record.signal = Some(signal);
                record.ranked_sentences = Some(ranked);
                record.claim_text = claims.concatenated.clone();
                record.claims = claims.sentences;
                build_query(
                    &article.headline,
                    &claims.concatenated,
                    QueryOrigin::P1P2,
                    self.settings.query_words,
                )?
            }
        };
        record.query = Some(QueryTrace {
            text: query.text().to_string(),
            origin: query.origin(),
            word_count: query.word_count(),
        });
        timings.ranking_ms = millis(t);

        let t = Instant::now();
        let outcome = gather_evidence(
            article,
            &record.claim_text,
            &query,
            self.provider.as_ref(),
            &self.credible,
            self.encoder.as_ref(),
            self.splitter.as_ref(),
            &self.settings.evidence,
        )?;
        timings.evidence_ms = millis(t);
        record.date_check = Some(outcome.date_check);
        record.candidates = outcome.candidates;
        record.evidence = EvidenceTrace {
            articles: outcome
                .evidence
                .articles
                .iter()
                .map(|a| {
                    let r = a.result();
                    EvidenceArticleTrace {
                        url: r.url.clone(),
                        domain: r.domain.clone(),
                        published: r.published,
                        title: r.title.clone(),
                    }
                })
                .collect(),
            sentences: outcome.evidence.sentences,
            concatenated: outcome.evidence.concatenated,
        };
        record.label = if record.evidence.is_empty() {
            Some(VeracityLabel::Nei)
        } else {
            article.label
        };

        if let Some(classifier) = &self.classifier {
            let input = record.concat_input()?;
            let probabilities = classifier.predict_proba(&input)?;
            record.prediction = Some(Prediction {
                label: crate::veracity::argmax_label(&probabilities),
                probabilities,
            });
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers())
            .build()
            .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))
    }

    /// Runs `variant` over `articles`, returning records in input order.
    pub fn run(&self, articles: &[Article], variant: PipelineVariant) -> Result<Vec<PipelineRecord>, PipelineError> {
        let mut records = Vec::with_capacity(articles.len());
        self.run_with(articles, variant, |r| {
            records.push(r);
            Ok(())
        })?;
        Ok(records)
    }

    /// Runs `variant` and streams records, in input order, to `out`.
    pub fn run_to_writer<W: Write>(
        &self,
        articles: &[Article],
        variant: PipelineVariant,
        out: &mut W,
    ) -> Result<RunSummary, PipelineError> {
        let summary = self.run_with(articles, variant, |r| write_record(out, &r))?;
        out.flush()?;
        Ok(summary)
    }

    fn run_with<F>(&self, articles: &[Article], variant: PipelineVariant, mut sink: F) -> Result<RunSummary, PipelineError>
    where
        F: FnMut(PipelineRecord) -> Result<(), PipelineError>,
    {
        if articles.is_empty() {
            return Err(PipelineError::NoArticles);
        }
        if variant.needs_summary() && self.summarizer.is_none() {
            return Err(PipelineError::Config(format!(
                "pipeline {} needs a summarizer",
                variant.short_name()
            )));
        }
        let pool = self.pool()?;
        let mut summary = RunSummary::default();
        // workers process a chunk in parallel; this thread is the only writer
        let chunk = self.workers() * 8;
        for batch in articles.chunks(chunk) {
            let records: Vec<PipelineRecord> =
                pool.install(|| batch.par_iter().map(|a| self.process(a, variant)).collect());
            for r in records {
                summary.total += 1;
                summary.failed += usize::from(r.is_error());
                summary.nei += usize::from(r.label == Some(VeracityLabel::Nei));
                sink(r)?;
            }
        }
        log::info!(
            "{}: {} articles, {} failed, {} NEI",
            variant.short_name(),
            summary.total,
            summary.failed,
            summary.nei
        );
        if summary.failed == summary.total {
            return Err(PipelineError::AllFailed(summary.total));
        }
        Ok(summary)
    }
}

/// Convenience wrapper over [`Pipeline::run`].
pub fn run_pipeline(
    articles: &[Article],
    variant: PipelineVariant,
    pipeline: &Pipeline,
) -> Result<Vec<PipelineRecord>, PipelineError> {
    pipeline.run(articles, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{fixture_corpus, Dataset};
    use crate::encode::ReferenceEncoder;
    use crate::evidence::{FixtureProvider, SearchError, SearchErrorKind, SearchResult};
    use crate::evidence::Query;
    use crate::summarize::LeadSummarizer;
    use crate::textproc::RuleSplitter;
    use chrono::NaiveDate;

    fn pipeline(provider: Box<dyn SearchProvider>) -> Pipeline {
        Pipeline {
            encoder: Box::new(ReferenceEncoder::default()),
            summarizer: Some(Box::new(LeadSummarizer::default())),
            provider,
            credible: CredibleDomainList::new(["reuters.com"]).unwrap(),
            splitter: Box::new(RuleSplitter::default()),
            classifier: None,
            settings: PipelineSettings::default(),
        }
    }

    /// Answers every query with one credible, dated result.
    struct Always;
    impl SearchProvider for Always {
        fn name(&self) -> &str {
            "always"
        }
        fn fetch(&self, _: &Query) -> Result<Vec<SearchResult>, SearchError> {
            Ok(vec![SearchResult {
                url: "https://www.reuters.com/x".into(),
                domain: "reuters.com".into(),
                published: NaiveDate::from_ymd_opt(2017, 6, 20),
                title: "x".into(),
                body: "Officials confirmed the report. The vote was close.".into(),
                provider_rank: 1,
            }])
        }
    }

    struct Failing;
    impl SearchProvider for Failing {
        fn name(&self) -> &str {
            "failing"
        }
        fn fetch(&self, _: &Query) -> Result<Vec<SearchResult>, SearchError> {
            Err(SearchError::new(SearchErrorKind::Unreachable, "down"))
        }
    }

    fn article(id: &str, headline: &str, body: &str) -> Article {
        Article {
            id: id.into(),
            headline: headline.into(),
            body: body.into(),
            published: NaiveDate::from_ymd_opt(2017, 6, 15),
            source_domain: None,
            raw_label: "true".into(),
            label: Some(VeracityLabel::True),
            dataset: Dataset::Fixture,
            reference_claim: None,
        }
    }

    #[test]
    fn empty_evidence_means_nei() {
        let p = pipeline(Box::new(FixtureProvider::default()));
        let arts = fixture_corpus().unwrap();
        for v in PipelineVariant::ALL {
            let recs = p.run(&arts, v).unwrap();
            assert!(recs.iter().all(|r| r.label == Some(VeracityLabel::Nei)));
        }
    }

    #[test]
    fn evidence_keeps_gold_and_claim_counts() {
        let p = pipeline(Box::new(Always));
        let a = article("a", "Council vote", "One sentence here. Two sentences here.");
        let r = p.process(&a, PipelineVariant::P1Headline);
        assert_eq!(r.label, Some(VeracityLabel::True));
        assert_eq!(r.claims.len(), 2);
        assert_eq!(r.evidence.articles.len(), 1);
        assert!(r.ranked_sentences.is_some());

        let r = p.process(&a, PipelineVariant::P3HeadlinePlusSummary);
        assert!(r.claims.is_empty() && r.ranked_sentences.is_none());
        let summary = r.summary.as_ref().unwrap().text.clone();
        assert_eq!(r.claim_text, format!("Council vote {summary}"));
        assert_eq!(r.query.unwrap().origin, QueryOrigin::P3);
    }

    #[test]
    fn provider_failure_is_captured_per_article() {
        let p = pipeline(Box::new(Failing));
        let arts = vec![article("a", "H", "Some text."), article("b", "H", "More text.")];
        assert!(matches!(p.run(&arts, PipelineVariant::P1Headline), Err(PipelineError::AllFailed(2))));
        let r = p.process(&arts[0], PipelineVariant::P1Headline);
        assert!(r.error.as_deref().unwrap().contains("down"));
        assert_eq!(r.label, None);
    }

    #[test]
    fn partial_failure_does_not_abort() {
        let p = pipeline(Box::new(Always));
        let arts = vec![article("a", "H", "Some text."), article("b", "   ", "More text.")];
        let recs = p.run(&arts, PipelineVariant::P1Headline).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].error.is_none());
        assert!(recs[1].error.is_some());
    }

    #[test]
    fn missing_summarizer_is_a_config_error() {
        let mut p = pipeline(Box::new(Always));
        p.summarizer = None;
        let arts = vec![article("a", "H", "Some text.")];
        assert!(matches!(p.run(&arts, PipelineVariant::P2Summary), Err(PipelineError::Config(_))));
        assert!(p.run(&arts, PipelineVariant::P1Headline).is_ok());
        assert!(matches!(p.run(&[], PipelineVariant::P1Headline), Err(PipelineError::NoArticles)));
    }

    #[test]
    fn variant_names() {
        for v in PipelineVariant::ALL {
            assert_eq!(v.short_name().parse::<PipelineVariant>().unwrap(), v);
        }
        assert!("p4".parse::<PipelineVariant>().is_err());
        assert_eq!(serde_json::to_string(&PipelineVariant::P3HeadlinePlusSummary).unwrap(), "\"p3_headline_plus_summary\"");
    }
}
