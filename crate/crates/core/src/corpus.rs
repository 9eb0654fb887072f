//! Article ingestion and veracity-label normalization.
//!
//! Source files carry the columns `id, headline, body, published,
//! source_domain, raw_label` and optionally `reference_claim`, either as
//! CSV/TSV or as JSON lines.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unknown dataset {0:?} (expected snopes, dnf300 or fixture)")]
    UnknownDataset(String),
    #[error("unknown record format {0:?} (expected csv, tsv or jsonl)")]
    UnknownFormat(String),
    #[error("duplicate article id {id:?} at row {row}")]
    DuplicateId { id: String, row: usize },
    #[error("unmapped raw label {raw:?} for dataset {dataset}")]
    UnmappedLabel { raw: String, dataset: Dataset },
    #[error("empty raw label")]
    EmptyLabel,
    #[error("article {0:?} has no label")]
    Unlabeled(String),
    #[error("unknown veracity label {0:?}")]
    UnknownLabel(String),
}

/// Four-way veracity outcome. Integer codes are fixed.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum VeracityLabel {
    False = 0,
    PartialTrue = 1,
    True = 2,
    Nei = 3,
}

impl VeracityLabel {
    pub const ALL: [VeracityLabel; 4] = [
        VeracityLabel::False,
        VeracityLabel::PartialTrue,
        VeracityLabel::True,
        VeracityLabel::Nei,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VeracityLabel::False => "false",
            VeracityLabel::PartialTrue => "partial_true",
            VeracityLabel::True => "true",
            VeracityLabel::Nei => "nei",
        }
    }
}

impl fmt::Display for VeracityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VeracityLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim().to_lowercase())
            .ok_or_else(|| CorpusError::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Snopes,
    Dnf300,
    Fixture,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dataset::Snopes => "snopes",
            Dataset::Dnf300 => "dnf300",
            Dataset::Fixture => "fixture",
        })
    }
}

impl FromStr for Dataset {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "snopes" => Ok(Dataset::Snopes),
            "dnf300" | "dnf-300" => Ok(Dataset::Dnf300),
            "fixture" => Ok(Dataset::Fixture),
            other => Err(CorpusError::UnknownDataset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Article {
    pub id: String,
    pub headline: String,
    pub body: String,
    pub published: Option<NaiveDate>,
    pub source_domain: Option<String>,
    pub raw_label: String,
    pub label: Option<VeracityLabel>,
    pub dataset: Dataset,
    /// Fact-checker's reference claim, used only by the gist experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_claim: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Csv,
    Tsv,
    JsonLines,
}

impl RecordFormat {
    /// Guesses from the file extension; anything unknown is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_lowercase)
            .as_deref()
        {
            Some("jsonl") | Some("ndjson") | Some("json") => RecordFormat::JsonLines,
            Some("tsv") => RecordFormat::Tsv,
            _ => RecordFormat::Csv,
        }
    }
}

impl FromStr for RecordFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "csv" => Ok(RecordFormat::Csv),
            "tsv" => Ok(RecordFormat::Tsv),
            "jsonl" | "ndjson" => Ok(RecordFormat::JsonLines),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Deserialize)]
struct SourceRow {
    id: String,
    #[serde(default)]
    headline: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    published: Option<String>,
    #[serde(default)]
    source_domain: Option<String>,
    #[serde(default)]
    raw_label: String,
    #[serde(default)]
    reference_claim: Option<String>,
}

/// Result of reading one source file.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub articles: Vec<Article>,
    /// Rows with an empty headline or body.
    pub dropped_empty: usize,
    /// Rows that failed to parse (bad columns, bad date); skipped.
    pub malformed: usize,
}

impl Ingested {
    pub fn rows_seen(&self) -> usize {
        self.articles.len() + self.dropped_empty + self.malformed
    }
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

fn row_to_article(row: SourceRow, dataset: Dataset) -> Result<Option<Article>, String> {
    let published = match non_blank(row.published) {
        Some(d) => Some(
            NaiveDate::parse_from_str(&d, "%Y-%m-%d")
                .map_err(|e| format!("bad published date {d:?}: {e}"))?,
        ),
        None => None,
    };
    let id = row.id.trim().to_string();
    if id.is_empty() {
        return Err("empty id".into());
    }
    if row.headline.trim().is_empty() || row.body.trim().is_empty() {
        return Ok(None);
    }
    Ok(Some(Article {
        id,
        headline: row.headline.trim().to_string(),
        body: row.body.trim().to_string(),
        published,
        source_domain: non_blank(row.source_domain).map(|d| d.to_lowercase()),
        raw_label: row.raw_label.trim().to_string(),
        label: None,
        dataset,
        reference_claim: non_blank(row.reference_claim),
    }))
}

/// Parses corpus rows from an in-memory source.
pub fn ingest_str(
    contents: &str,
    format: RecordFormat,
    dataset: Dataset,
) -> Result<Ingested, CorpusError> {
    let rows: Vec<Result<SourceRow, String>> = match format {
        RecordFormat::JsonLines => contents
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
            .collect(),
        RecordFormat::Csv | RecordFormat::Tsv => {
            let delimiter = if format == RecordFormat::Tsv { b'\t' } else { b',' };
            csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .flexible(false)
                .from_reader(contents.as_bytes())
                .deserialize()
                .map(|r| r.map_err(|e| e.to_string()))
                .collect()
        }
    };

    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (i, row) in rows.into_iter().enumerate() {
        let row_no = i + 1;
        let parsed = row.and_then(|r| row_to_article(r, dataset));
        match parsed {
            Ok(Some(article)) => {
                if !seen.insert(article.id.clone()) {
                    return Err(CorpusError::DuplicateId {
                        id: article.id,
                        row: row_no,
                    });
                }
                out.articles.push(article);
            }
            Ok(None) => out.dropped_empty += 1,
            Err(e) => {
                log::warn!("skipping malformed row {row_no}: {e}");
                out.malformed += 1;
            }
        }
    }
    Ok(out)
}

pub fn ingest(path: &Path, dataset: Dataset) -> Result<Ingested, CorpusError> {
    ingest_with_format(path, RecordFormat::from_path(path), dataset)
}

pub fn ingest_with_format(
    path: &Path,
    format: RecordFormat,
    dataset: Dataset,
) -> Result<Ingested, CorpusError> {
    let contents = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_str(&contents, format, dataset)
}

/// Outcome of mapping one raw label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalized {
    Label(VeracityLabel),
    Drop,
}

/// Raw-label table. Keys are matched lowercased and whitespace-trimmed.
#[derive(Debug, Clone)]
pub struct LabelMap {
    entries: HashMap<String, Normalized>,
}

impl Default for LabelMap {
    fn default() -> Self {
        let mut entries = HashMap::new();
        entries.insert("true".into(), Normalized::Label(VeracityLabel::True));
        entries.insert("false".into(), Normalized::Label(VeracityLabel::False));
        for partial in ["mostly true", "mixture", "mostly false"] {
            entries.insert(partial.into(), Normalized::Label(VeracityLabel::PartialTrue));
        }
        entries.insert("opinion".into(), Normalized::Drop);
        Self { entries }
    }
}

impl LabelMap {
    /// Adds or replaces entries, e.g. for a DNF-300 rating vocabulary.
    /// `target` is a label name or `drop`.
    pub fn with_override(mut self, raw: &str, target: &str) -> Result<Self, CorpusError> {
        let value = if target.trim().eq_ignore_ascii_case("drop") {
            Normalized::Drop
        } else {
            let label: VeracityLabel = target.parse()?;
            if label == VeracityLabel::Nei {
                // NEI comes only from evidence gathering
                return Err(CorpusError::UnknownLabel(target.to_string()));
            }
            Normalized::Label(label)
        };
        self.entries.insert(raw.trim().to_lowercase(), value);
        Ok(self)
    }

    pub fn lookup(&self, raw_label: &str, dataset: Dataset) -> Result<Normalized, CorpusError> {
        let key = raw_label.trim().to_lowercase();
        if key.is_empty() {
            return Err(CorpusError::EmptyLabel);
        }
        self.entries
            .get(&key)
            .copied()
            .ok_or_else(|| CorpusError::UnmappedLabel {
                raw: raw_label.to_string(),
                dataset,
            })
    }
}

pub fn normalize_label(raw_label: &str, dataset: Dataset) -> Result<Normalized, CorpusError> {
    LabelMap::default().lookup(raw_label, dataset)
}

/// Labelled articles plus the number dropped by the table (e.g. opinion pieces).
#[derive(Debug, Clone, Default)]
pub struct LabeledCorpus {
    pub articles: Vec<Article>,
    pub dropped_by_label: usize,
}

/// Applies `map` to every article. Unmapped labels are fatal.
pub fn normalize_articles(
    articles: Vec<Article>,
    map: &LabelMap,
) -> Result<LabeledCorpus, CorpusError> {
    let mut out = LabeledCorpus::default();
    for mut a in articles {
        match map.lookup(&a.raw_label, a.dataset)? {
            Normalized::Label(l) => {
                a.label = Some(l);
                out.articles.push(a);
            }
            Normalized::Drop => out.dropped_by_label += 1,
        }
    }
    Ok(out)
}

pub type LabelDistribution = BTreeMap<VeracityLabel, usize>;

pub fn empty_distribution() -> LabelDistribution {
    VeracityLabel::ALL.iter().map(|&l| (l, 0)).collect()
}

pub fn label_distribution<I>(labels: I) -> LabelDistribution
where
    I: IntoIterator<Item = VeracityLabel>,
{
    let mut dist = empty_distribution();
    for l in labels {
        *dist.entry(l).or_default() += 1;
    }
    dist
}

/// Counts article labels; every article must be labelled.
pub fn article_label_distribution(articles: &[Article]) -> Result<LabelDistribution, CorpusError> {
    let labels = articles
        .iter()
        .map(|a| a.label.ok_or_else(|| CorpusError::Unlabeled(a.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(label_distribution(labels))
}

/// The bundled twelve-article corpus used by tests and `--corpus fixture`.
pub const FIXTURE_CORPUS: &str = include_str!("../fixtures/corpus.jsonl");

pub fn fixture_corpus() -> Result<Vec<Article>, CorpusError> {
    let ingested = ingest_str(FIXTURE_CORPUS, RecordFormat::JsonLines, Dataset::Fixture)?;
    Ok(normalize_articles(ingested.articles, &LabelMap::default())?.articles)
}
