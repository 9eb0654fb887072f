use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Pipeline, PipelineError, PipelineSettings};
use crate::corpus::LabelMap;
use crate::encode::{EncoderBackend, HttpEncoder, ReferenceEncoder, DEFAULT_DIMENSION};
use crate::evidence::{
    CredibleDomainList, EvidenceSettings, FixtureProvider, LiveProvider, LiveProviderConfig,
    SearchProvider, DEFAULT_QUERY_WORDS, DEFAULT_WINDOW_MONTHS, MAX_RESULTS,
};
use crate::summarize::{HttpSummarizer, LeadSummarizer, SummarizerBackend, DEFAULT_MAX_TOKENS, DEFAULT_MIN_TOKENS};
use crate::textproc::RuleSplitter;
use crate::veracity::{ClassifierBackend, HashedLinearClassifier, ModelSnapshot, TrainConfig};

/// Search results for the bundled corpus, keyed by the queries the
/// reference backends produce.
pub const FIXTURE_SEARCH_RESULTS: &str = include_str!("../../fixtures/search_results.json");
pub const FIXTURE_CREDIBLE_DOMAINS: &str = include_str!("../../fixtures/credible_domains.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderConfig {
    Reference {
        #[serde(default = "default_dimension")]
        dimension: usize,
        #[serde(default)]
        seed: u64,
    },
    Http {
        endpoint: String,
        model: String,
        dimension: usize,
    },
}

fn default_dimension() -> usize {
    DEFAULT_DIMENSION
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self::Reference {
            dimension: DEFAULT_DIMENSION,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SummarizerConfig {
    Lead {
        #[serde(default = "default_min_tokens")]
        min_tokens: usize,
        #[serde(default = "default_max_tokens")]
        max_tokens: usize,
    },
    Http {
        endpoint: String,
        model: String,
        #[serde(default = "default_min_tokens")]
        min_tokens: usize,
        #[serde(default = "default_max_tokens")]
        max_tokens: usize,
    },
}

fn default_min_tokens() -> usize {
    DEFAULT_MIN_TOKENS
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        Self::Lead {
            min_tokens: DEFAULT_MIN_TOKENS,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Fixture,
    Live,
}

impl std::str::FromStr for ProviderKind {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixture" => Ok(Self::Fixture),
            "live" => Ok(Self::Live),
            other => Err(PipelineError::Config(format!("unknown provider {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Fixture table; the bundled one when unset.
    pub fixture_path: Option<PathBuf>,
    pub endpoint: String,
    pub api_key_env: String,
    pub cache_dir: Option<PathBuf>,
    pub count: usize,
    pub max_in_flight: usize,
    pub requests_per_second: f64,
    pub max_retries: u32,
    pub timeout_secs: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        let live = LiveProviderConfig::default();
        Self {
            kind: ProviderKind::Fixture,
            fixture_path: None,
            endpoint: live.endpoint,
            api_key_env: live.api_key_env,
            cache_dir: None,
            count: MAX_RESULTS,
            max_in_flight: live.max_in_flight,
            requests_per_second: live.requests_per_second,
            max_retries: live.max_retries,
            timeout_secs: live.timeout.as_secs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvidenceConfig {
    /// One registrable domain per line; the bundled list when unset.
    pub credible_domains: Option<PathBuf>,
    pub window_months: u32,
    pub max_articles: usize,
    pub max_sentences: usize,
}

impl Default for EvidenceConfig {
    fn default() -> Self {
        Self {
            credible_domains: None,
            window_months: DEFAULT_WINDOW_MONTHS,
            max_articles: 3,
            max_sentences: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaimsConfig {
    pub k: usize,
    pub min_sentence_tokens: usize,
}

impl Default for ClaimsConfig {
    fn default() -> Self {
        Self {
            k: crate::claimrank::DEFAULT_CLAIM_COUNT,
            min_sentence_tokens: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    pub word_limit: usize,
}

impl Default for QueryConfig {
    fn default() -> Self {
        Self {
            word_limit: DEFAULT_QUERY_WORDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub workers: usize,
    pub record_timings: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            workers: 4,
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub dimension: usize,
    pub hash_seed: u64,
    /// Trained snapshot used to fill predictions during `run`.
    pub model: Option<PathBuf>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            dimension: 4096,
            hash_seed: 0,
            model: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Extra raw-label mappings: raw label to `false`, `partial_true`,
    /// `true` or `drop`.
    pub label_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextprocConfig {
    /// One abbreviation per line; the built-in list when unset.
    pub abbreviations: Option<PathBuf>,
}

/// Declarative run configuration. Relative paths resolve against the
/// directory of the file it was loaded from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub encoder: EncoderConfig,
    pub summarizer: SummarizerConfig,
    pub classifier: ClassifierConfig,
    pub train: TrainConfig,
    pub provider: ProviderConfig,
    pub evidence: EvidenceConfig,
    pub claims: ClaimsConfig,
    pub query: QueryConfig,
    pub pipeline: PipelineConfig,
    pub corpus: CorpusConfig,
    pub textproc: TextprocConfig,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

impl Config {
    pub fn parse(contents: &str) -> Result<Self, PipelineError> {
        toml::from_str(contents).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let contents = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&contents)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn encoder(&self) -> Result<Box<dyn EncoderBackend>, PipelineError> {
        let err = |e: crate::encode::EncodeError| PipelineError::Config(format!("encoder: {e}"));
        Ok(match &self.encoder {
            EncoderConfig::Reference { dimension, seed } => {
                Box::new(ReferenceEncoder::new(*dimension, *seed).map_err(err)?)
            }
            EncoderConfig::Http {
                endpoint,
                model,
                dimension,
            } => Box::new(HttpEncoder::new(endpoint, model, *dimension).map_err(err)?),
        })
    }

    pub fn splitter(&self) -> Result<RuleSplitter, PipelineError> {
        match &self.textproc.abbreviations {
            None => Ok(RuleSplitter::default()),
            Some(p) => RuleSplitter::from_file(&self.resolve(p))
                .map_err(|e| PipelineError::Config(format!("abbreviations: {e}"))),
        }
    }

    pub fn summarizer(&self) -> Result<Box<dyn SummarizerBackend>, PipelineError> {
        let err = |e: crate::summarize::SummarizeError| PipelineError::Config(format!("summarizer: {e}"));
        Ok(match &self.summarizer {
            SummarizerConfig::Lead { min_tokens, max_tokens } => Box::new(
                LeadSummarizer::new(Box::new(self.splitter()?), *min_tokens, *max_tokens).map_err(err)?,
            ),
            SummarizerConfig::Http {
                endpoint,
                model,
                min_tokens,
                max_tokens,
            } => Box::new(HttpSummarizer::new(endpoint, model, *min_tokens, *max_tokens).map_err(err)?),
        })
    }

    pub fn provider(&self, kind: ProviderKind) -> Result<Box<dyn SearchProvider>, PipelineError> {
        let err = |e: crate::evidence::SearchError| PipelineError::Config(format!("provider: {e}"));
        let p = &self.provider;
        Ok(match kind {
            ProviderKind::Fixture => Box::new(match &p.fixture_path {
                None => FixtureProvider::parse(FIXTURE_SEARCH_RESULTS).map_err(err)?,
                Some(path) => FixtureProvider::from_file(&self.resolve(path)).map_err(err)?,
            }),
            ProviderKind::Live => Box::new(
                LiveProvider::new(LiveProviderConfig {
                    endpoint: p.endpoint.clone(),
                    api_key_env: p.api_key_env.clone(),
                    count: p.count,
                    cache_dir: p.cache_dir.as_deref().map(|d| self.resolve(d)),
                    max_in_flight: p.max_in_flight,
                    requests_per_second: p.requests_per_second,
                    max_retries: p.max_retries,
                    timeout: Duration::from_secs(p.timeout_secs),
                })
                .map_err(err)?,
            ),
        })
    }

    pub fn credible_domains(&self) -> Result<CredibleDomainList, PipelineError> {
        let err = |e: crate::evidence::EvidenceError| PipelineError::Config(format!("credible domains: {e}"));
        match &self.evidence.credible_domains {
            None => CredibleDomainList::parse(FIXTURE_CREDIBLE_DOMAINS).map_err(err),
            Some(p) => CredibleDomainList::from_file(&self.resolve(p)).map_err(err),
        }
    }

    pub fn label_map(&self) -> Result<LabelMap, PipelineError> {
        self.corpus
            .label_map
            .iter()
            .try_fold(LabelMap::default(), |m, (raw, target)| m.with_override(raw, target))
            .map_err(|e| PipelineError::Config(format!("label map: {e}")))
    }

    pub fn classifier(&self) -> Result<Option<Box<dyn ClassifierBackend>>, PipelineError> {
        let Some(path) = &self.classifier.model else {
            return Ok(None);
        };
        let path = self.resolve(path);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let snapshot: ModelSnapshot =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let model = HashedLinearClassifier::from_snapshot(&snapshot)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(Some(Box::new(model)))
    }

    pub fn settings(&self) -> PipelineSettings {
        PipelineSettings {
            claims: self.claims.k,
            min_sentence_tokens: self.claims.min_sentence_tokens,
            query_words: self.query.word_limit,
            evidence: EvidenceSettings {
                max_articles: self.evidence.max_articles,
                max_sentences: self.evidence.max_sentences,
                window_months: self.evidence.window_months,
            },
            workers: self.pipeline.workers,
            record_timings: self.pipeline.record_timings,
        }
    }

    /// Resolves every backend. The summarizer is built only when `summarizer`
    /// is set.
    pub fn build_pipeline(&self, provider: ProviderKind, summarizer: bool) -> Result<Pipeline, PipelineError> {
        if self.claims.k == 0 {
            return Err(PipelineError::Config("claims.k must be positive".into()));
        }
        if self.query.word_limit == 0 {
            return Err(PipelineError::Config("query.word_limit must be positive".into()));
        }
        Ok(Pipeline {
            encoder: self.encoder()?,
            summarizer: if summarizer { Some(self.summarizer()?) } else { None },
            provider: self.provider(provider)?,
            credible: self.credible_domains()?,
            splitter: Box::new(self.splitter()?),
            classifier: self.classifier()?,
            settings: self.settings(),
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}
