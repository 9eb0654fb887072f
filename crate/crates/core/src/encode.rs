//! Sentence embeddings: backend contract, a hashed bag-of-tokens reference
//! encoder, an HTTP adapter for remote models, and cosine distance.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use twox_hash::XxHash64;

use crate::textproc::tokenize;

pub const DEFAULT_DIMENSION: usize = 256;
pub const MIN_REFERENCE_DIMENSION: usize = 8;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("cannot encode text with no tokens")]
    EmptyText,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("reference encoder dimension must be at least {MIN_REFERENCE_DIMENSION}, got {0}")]
    DimensionTooSmall(usize),
    #[error("vector has zero norm or non-finite entries")]
    Degenerate,
    #[error("encoder backend {backend} failed: {message}")]
    Backend { backend: String, message: String },
}

/// A unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// L2-normalizes `raw`. Fails on zero or non-finite vectors.
    pub fn normalize(raw: Vec<f64>) -> Result<Self, EncodeError> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(EncodeError::Degenerate);
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EncodeError::Degenerate);
        }
        Ok(Self(raw.into_iter().map(|v| v / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Whether a backend may be called from several threads at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Concurrency {
    ThreadSafe,
    SingleThreaded,
}

pub trait EncoderBackend: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Embedding, EncodeError>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::ThreadSafe
    }
}

/// Encodes `text`, enforcing the non-empty input and unit-norm output contract.
pub fn encode(backend: &dyn EncoderBackend, text: &str) -> Result<Embedding, EncodeError> {
    if tokenize(text).is_empty() {
        return Err(EncodeError::EmptyText);
    }
    let emb = backend.embed(text)?;
    if emb.dimension() != backend.dimension() {
        return Err(EncodeError::DimensionMismatch(
            emb.dimension(),
            backend.dimension(),
        ));
    }
    if (emb.norm() - 1.0).abs() > 1e-9 || emb.0.iter().any(|v| !v.is_finite()) {
        return Err(EncodeError::Degenerate);
    }
    Ok(emb)
}

/// `1 - a·b`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64, EncodeError> {
    if a.dimension() != b.dimension() {
        return Err(EncodeError::DimensionMismatch(a.dimension(), b.dimension()));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((1.0 - dot).clamp(0.0, 2.0))
}

/// Bucket a token falls into under the seeded xxHash64.
pub fn token_bucket(token: &str, dimension: usize, seed: u64) -> usize {
    (XxHash64::oneshot(seed, token.as_bytes()) % dimension as u64) as usize
}

/// Hashed bag-of-tokens counts, not normalized.
pub fn hashed_counts(text: &str, dimension: usize, seed: u64) -> Vec<f64> {
    let mut counts = vec![0.0; dimension];
    for t in tokenize(text).tokens() {
        counts[token_bucket(t, dimension, seed)] += 1.0;
    }
    counts
}

pub fn reference_encode(text: &str, dimension: usize, seed: u64) -> Result<Embedding, EncodeError> {
    if dimension < MIN_REFERENCE_DIMENSION {
        return Err(EncodeError::DimensionTooSmall(dimension));
    }
    let counts = hashed_counts(text, dimension, seed);
    if counts.iter().all(|&c| c == 0.0) {
        return Err(EncodeError::EmptyText);
    }
    Embedding::normalize(counts)
}

#[derive(Debug, Clone)]
pub struct ReferenceEncoder {
    dimension: usize,
    seed: u64,
}

impl ReferenceEncoder {
    pub fn new(dimension: usize, seed: u64) -> Result<Self, EncodeError> {
        if dimension < MIN_REFERENCE_DIMENSION {
            return Err(EncodeError::DimensionTooSmall(dimension));
        }
        Ok(Self { dimension, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Default for ReferenceEncoder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
            seed: 0,
        }
    }
}

impl EncoderBackend for ReferenceEncoder {
    fn name(&self) -> &str {
        "reference"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, EncodeError> {
        reference_encode(text, self.dimension, self.seed)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

/// Remote sentence-embedding service.
///
/// Posts `{"model": .., "text": ..}` to the endpoint and expects
/// `{"embedding": [..]}` back. The vector is normalized locally.
pub struct HttpEncoder {
    endpoint: String,
    model: String,
    dimension: usize,
    client: reqwest::blocking::Client,
}

impl HttpEncoder {
    pub fn new(endpoint: &str, model: &str, dimension: usize) -> Result<Self, EncodeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| EncodeError::Backend {
                backend: "http".into(),
                message: e.to_string(),
            })?;
        Ok(Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            dimension,
            client,
        })
    }
}

impl EncoderBackend for HttpEncoder {
    fn name(&self) -> &str {
        &self.model
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Embedding, EncodeError> {
        let fail = |message: String| EncodeError::Backend {
            backend: self.model.clone(),
            message,
        };
        let resp: EmbedResponse = self
            .client
            .post(&self.endpoint)
            .json(&EmbedRequest {
                model: &self.model,
                text,
            })
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| fail(e.to_string()))?
            .json()
            .map_err(|e| fail(format!("malformed response: {e}")))?;
        if resp.embedding.len() != self.dimension {
            return Err(EncodeError::DimensionMismatch(
                resp.embedding.len(),
                self.dimension,
            ));
        }
        Embedding::normalize(resp.embedding)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_and_unit_norm() {
        let enc = ReferenceEncoder::default();
        let a = encode(&enc, "The senator said taxes rose.").unwrap();
        let b = encode(&enc, "The senator said taxes rose.").unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-9);
        assert_eq!(a.dimension(), DEFAULT_DIMENSION);
    }

    #[test]
    fn empty_text_rejected() {
        let enc = ReferenceEncoder::default();
        assert!(matches!(encode(&enc, "  "), Err(EncodeError::EmptyText)));
        assert!(matches!(encode(&enc, "?!"), Err(EncodeError::EmptyText)));
        assert!(matches!(
            reference_encode("", 16, 0),
            Err(EncodeError::EmptyText)
        ));
        assert!(matches!(
            reference_encode("x", 4, 0),
            Err(EncodeError::DimensionTooSmall(4))
        ));
    }

    #[test]
    fn repetition_does_not_change_direction() {
        // "a b" counts {a:1, b:1}; "a b a b" counts {a:2, b:2}: same direction
        let x = reference_encode("a b", 64, 7).unwrap();
        let y = reference_encode("a b a b", 64, 7).unwrap();
        assert!(cosine_distance(&x, &y).unwrap() < 1e-12);
        let x = reference_encode("a", 64, 7).unwrap();
        let y = reference_encode("a a a", 64, 7).unwrap();
        assert!(cosine_distance(&x, &y).unwrap() < 1e-12);
        let x = reference_encode("x", 64, 7).unwrap();
        assert_eq!(cosine_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_buckets_are_orthogonal() {
        let (dim, seed) = (64, 3);
        let left = ["alpha", "beta"];
        let right = ["gamma", "delta"];
        let lb: Vec<usize> = left.iter().map(|t| token_bucket(t, dim, seed)).collect();
        let rb: Vec<usize> = right.iter().map(|t| token_bucket(t, dim, seed)).collect();
        assert!(lb.iter().all(|b| !rb.contains(b)), "pick other tokens: {lb:?} {rb:?}");
        let x = reference_encode(&left.join(" "), dim, seed).unwrap();
        let y = reference_encode(&right.join(" "), dim, seed).unwrap();
        assert_eq!(cosine_distance(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn distance_examples() {
        let e1 = Embedding::normalize(vec![1.0, 0.0]).unwrap();
        let e2 = Embedding::normalize(vec![0.0, 1.0]).unwrap();
        let neg = Embedding::normalize(vec![-1.0, 0.0]).unwrap();
        assert_eq!(cosine_distance(&e1, &e1).unwrap(), 0.0);
        assert_eq!(cosine_distance(&e1, &e2).unwrap(), 1.0);
        assert_eq!(cosine_distance(&e1, &neg).unwrap(), 2.0);
        let e3 = Embedding::normalize(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            cosine_distance(&e1, &e3),
            Err(EncodeError::DimensionMismatch(2, 3))
        ));
        assert!(Embedding::normalize(vec![0.0, 0.0]).is_err());
        assert!(Embedding::normalize(vec![f64::NAN, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 6),
            v in prop::collection::vec(-10.0f64..10.0, 6),
            alpha in 0.01f64..100.0,
            beta in 0.01f64..100.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let a = Embedding::normalize(u.clone()).unwrap();
            let b = Embedding::normalize(v.clone()).unwrap();
            let d = cosine_distance(&a, &b).unwrap();
            prop_assert!((0.0..=2.0).contains(&d));
            prop_assert!((d - cosine_distance(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(cosine_distance(&a, &a).unwrap() < 1e-12);
            let sa = Embedding::normalize(u.iter().map(|x| x * alpha).collect()).unwrap();
            let sb = Embedding::normalize(v.iter().map(|x| x * beta).collect()).unwrap();
            prop_assert!((cosine_distance(&sa, &sb).unwrap() - d).abs() < 1e-9);
        }
    }
}
