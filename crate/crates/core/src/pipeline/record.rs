use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{PipelineError, PipelineVariant};
use crate::claimrank::{InternalSignal, RankedSentence};
use crate::corpus::VeracityLabel;
use crate::evidence::{CandidateAudit, DateCheck, EvidenceSentence, QueryOrigin};
use crate::veracity::{featurize_concat, featurize_content, Example, Probabilities, VeracityError, CONTENT_WORDS};

pub const RECORD_SCHEMA: &str = "claimcheck.record/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTrace {
    pub text: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub text: String,
    pub origin: QueryOrigin,
    pub word_count: usize,
}

/// A kept evidence article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceArticleTrace {
    pub url: String,
    pub domain: String,
    pub published: Option<NaiveDate>,
    pub title: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTrace {
    pub articles: Vec<EvidenceArticleTrace>,
    pub sentences: Vec<EvidenceSentence>,
    pub concatenated: String,
}

impl EvidenceTrace {
    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: VeracityLabel,
    pub probabilities: Probabilities,
}

/// Wall-clock milliseconds per stage. Recorded only on request because it
/// makes records differ between runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub signal_ms: f64,
    pub ranking_ms: f64,
    pub evidence_ms: f64,
    pub total_ms: f64,
}

/// Everything one article went through, enough to re-score it offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub schema: String,
    pub article_id: String,
    pub variant: PipelineVariant,
    pub headline: String,
    /// First words of the body, the input of the content-only baseline.
    pub content: String,
    pub gold_label: Option<VeracityLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummaryTrace>,
    pub signal: Option<InternalSignal>,
    /// Every body sentence in rank order; absent for P3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranked_sentences: Option<Vec<RankedSentence>>,
    /// Top-k claim sentences; empty for P3.
    pub claims: Vec<RankedSentence>,
    /// Claim text `C` fed to evidence ranking and the classifier.
    pub claim_text: String,
    pub query: Option<QueryTrace>,
    pub date_check: Option<DateCheck>,
    pub candidates: Vec<CandidateAudit>,
    pub evidence: EvidenceTrace,
    /// Gold label, overridden by NEI when no evidence survived.
    pub label: Option<VeracityLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PipelineRecord {
    pub(crate) fn empty(article_id: &str, variant: PipelineVariant, headline: &str) -> Self {
        Self {
            schema: RECORD_SCHEMA.to_string(),
            article_id: article_id.to_string(),
            variant,
            headline: headline.to_string(),
            content: String::new(),
            gold_label: None,
            summary: None,
            signal: None,
            ranked_sentences: None,
            claims: Vec::new(),
            claim_text: String::new(),
            query: None,
            date_check: None,
            candidates: Vec::new(),
            evidence: EvidenceTrace::default(),
            label: None,
            prediction: None,
            timings: None,
            error: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// `C [SEP] E` rebuilt from the persisted claim and evidence.
    pub fn concat_input(&self) -> Result<String, VeracityError> {
        featurize_concat(&self.claim_text, &self.evidence.concatenated)
    }

    pub fn content_input(&self) -> Result<String, VeracityError> {
        featurize_content(&self.content, CONTENT_WORDS)
    }
}

/// Classifier input built from a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Claim and evidence joined by `[SEP]`.
    Concat,
    /// First 500 words of the article body.
    Content,
}

impl std::str::FromStr for InputMode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concat" => Ok(Self::Concat),
            "content" => Ok(Self::Content),
            other => Err(PipelineError::Config(format!("unknown input mode {other:?}"))),
        }
    }
}

/// Labelled training examples from records. Error records and records
/// without a label are skipped.
pub fn examples_from_records(
    records: &[PipelineRecord],
    mode: InputMode,
) -> Result<Vec<Example>, VeracityError> {
    records
        .iter()
        .filter(|r| !r.is_error())
        .filter_map(|r| r.label.map(|l| (r, l)))
        .map(|(r, label)| {
            let text = match mode {
                InputMode::Concat => r.concat_input()?,
                InputMode::Content => r.content_input()?,
            };
            Ok(Example::new(text, label))
        })
        .collect()
}

pub fn write_record<W: Write>(out: &mut W, record: &PipelineRecord) -> Result<(), PipelineError> {
    serde_json::to_writer(&mut *out, record).map_err(|e| PipelineError::Record(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads JSON-lines records, rejecting unknown schema tags.
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<PipelineRecord>, PipelineError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PipelineRecord = serde_json::from_str(&line)
            .map_err(|e| PipelineError::Record(format!("line {}: {e}", n + 1)))?;
        if record.schema != RECORD_SCHEMA {
            return Err(PipelineError::Record(format!(
                "line {}: unsupported schema {:?}",
                n + 1,
                record.schema
            )));
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::veracity::{NO_EVIDENCE, SEP};

    fn record(label: Option<VeracityLabel>) -> PipelineRecord {
        let mut r = PipelineRecord::empty("a1", PipelineVariant::P1Headline, "H");
        r.claim_text = "The claim.".into();
        r.content = "Body words here.".into();
        r.label = label;
        r
    }

    #[test]
    fn round_trip_and_schema_check() {
        let mut buf = Vec::new();
        write_record(&mut buf, &record(Some(VeracityLabel::Nei))).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(back, [record(Some(VeracityLabel::Nei))]);

        let text = String::from_utf8(buf).unwrap().replace(RECORD_SCHEMA, "other/v9");
        assert!(read_records(text.as_bytes()).is_err());
    }

    #[test]
    fn examples_skip_unlabelled_and_errors() {
        let mut failed = record(Some(VeracityLabel::True));
        failed.error = Some("boom".into());
        let recs = [record(Some(VeracityLabel::Nei)), record(None), failed];
        let ex = examples_from_records(&recs, InputMode::Concat).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].text, format!("The claim. {SEP} {NO_EVIDENCE}"));
        let ex = examples_from_records(&recs, InputMode::Content).unwrap();
        assert_eq!(ex[0].text, "Body words here.");
    }
}
