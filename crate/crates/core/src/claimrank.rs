//! Ranks article sentences by cosine distance to an internal signal (the
//! headline or a summary) and picks the top-k as check-worthy claims.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{cosine_distance, encode, EncodeError, EncoderBackend};
use crate::textproc::{token_count, SentenceSplitter};

pub const DEFAULT_CLAIM_COUNT: usize = 3;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("article body yields no sentences")]
    EmptyBody,
    #[error("internal signal text is empty")]
    EmptySignal,
    #[error("nothing to select claims from")]
    NothingRanked,
    #[error("k must be positive")]
    ZeroK,
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Headline,
    Summary,
    HeadlinePlusSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalSignal {
    pub kind: SignalKind,
    pub text: String,
}

impl InternalSignal {
    pub fn new(kind: SignalKind, text: impl Into<String>) -> Result<Self, RankError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(RankError::EmptySignal);
        }
        Ok(Self { kind, text })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSentence {
    /// 0-based position in the segmented article.
    pub index: usize,
    pub text: String,
    pub distance: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimSet {
    pub sentences: Vec<RankedSentence>,
    /// Sentence texts joined by single spaces in rank order.
    pub concatenated: String,
}

/// Ascending by distance, ties by position.
pub(crate) fn by_distance_then_position(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Ranks `candidates` against `anchor` text. Candidates that cannot be
/// encoded (no tokens) are an error.
pub fn rank_texts(
    anchor: &str,
    candidates: &[&str],
    backend: &dyn EncoderBackend,
) -> Result<Vec<RankedSentence>, RankError> {
    let anchor_emb = encode(backend, anchor)?;
    let mut scored = candidates
        .iter()
        .enumerate()
        .map(|(index, text)| {
            let emb = encode(backend, text)?;
            Ok((index, cosine_distance(&anchor_emb, &emb)?))
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    scored.sort_by(|a, b| by_distance_then_position((a.1, a.0), (b.1, b.0)));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(pos, (index, distance))| RankedSentence {
            index,
            text: candidates[index].to_string(),
            distance,
            rank: pos + 1,
        })
        .collect())
}

/// Segments `body` and ranks every sentence against the signal.
///
/// `min_sentence_tokens` drops shorter sentences before ranking; 0 keeps all.
pub fn rank_sentences(
    body: &str,
    signal: &InternalSignal,
    backend: &dyn EncoderBackend,
    splitter: &dyn SentenceSplitter,
    min_sentence_tokens: usize,
) -> Result<Vec<RankedSentence>, RankError> {
    if signal.text.trim().is_empty() {
        return Err(RankError::EmptySignal);
    }
    let sentences = splitter.split(body);
    if sentences.is_empty() {
        return Err(RankError::EmptyBody);
    }
    let kept: Vec<(usize, &str)> = sentences
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, s)| token_count(s) >= min_sentence_tokens)
        .collect();
    if kept.is_empty() {
        return Err(RankError::EmptyBody);
    }
    let texts: Vec<&str> = kept.iter().map(|&(_, s)| s).collect();
    let mut ranked = rank_texts(&signal.text, &texts, backend)?;
    for r in &mut ranked {
        r.index = kept[r.index].0;
    }
    Ok(ranked)
}

pub fn select_claims(ranked: &[RankedSentence], k: usize) -> Result<ClaimSet, RankError> {
    if k == 0 {
        return Err(RankError::ZeroK);
    }
    if ranked.is_empty() {
        return Err(RankError::NothingRanked);
    }
    let sentences: Vec<RankedSentence> = ranked.iter().take(k).cloned().collect();
    let concatenated = sentences
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ClaimSet {
        sentences,
        concatenated,
    })
}
