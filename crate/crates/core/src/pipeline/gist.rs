use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::Article;
use crate::summarize::{summarize, SummarizerBackend};
use crate::textproc::{rouge1, rouge_l, tokenize};

pub const DEFAULT_GIST_SAMPLE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GistRow {
    /// `headline` or the summarizer backend name.
    pub signal: String,
    /// Mean ROUGE-1 F1 ×100.
    pub rouge1: f64,
    /// Mean ROUGE-L F1 ×100.
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GistReport {
    pub sample_size: usize,
    pub rows: Vec<GistRow>,
}

impl GistReport {
    pub fn to_table(&self) -> String {
        let mut out = format!("n={}\n{:<16}{:>10}{:>10}\n", self.sample_size, "signal", "ROUGE-1", "ROUGE-L");
        for r in &self.rows {
            out.push_str(&format!("{:<16}{:>10.2}{:>10.2}\n", r.signal, r.rouge1, r.rouge_l));
        }
        out
    }
}

/// Scores the headline and each summarizer's output against the reference
/// claim. Articles with a reference claim are subsampled to `sample_size`
/// with `seed`; the sample keeps corpus order.
pub fn run_gist_experiment(
    articles: &[Article],
    summarizers: &[&dyn SummarizerBackend],
    sample_size: usize,
    seed: u64,
) -> Result<GistReport, PipelineError> {
    let eligible: Vec<&Article> = articles
        .iter()
        .filter(|a| a.reference_claim.as_deref().is_some_and(|c| !tokenize(c).is_empty()))
        .collect();
    if eligible.is_empty() || sample_size == 0 {
        return Err(PipelineError::NoReferenceClaims);
    }
    let chosen: Vec<&Article> = if eligible.len() > sample_size {
        let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), eligible.len(), sample_size).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| eligible[i]).collect()
    } else {
        eligible
    };

    let score = |texts: &[String]| -> (f64, f64) {
        let (mut r1, mut rl) = (0.0, 0.0);
        for (a, text) in chosen.iter().zip(texts) {
            let reference = tokenize(a.reference_claim.as_deref().unwrap_or_default());
            let candidate = tokenize(text);
            r1 += rouge1(&candidate, &reference).f1;
            rl += rouge_l(&candidate, &reference).f1;
        }
        let n = chosen.len() as f64;
        (100.0 * r1 / n, 100.0 * rl / n)
    };

    let mut rows = Vec::with_capacity(summarizers.len() + 1);
    let headlines: Vec<String> = chosen.iter().map(|a| a.headline.clone()).collect();
    let (r1, rl) = score(&headlines);
    rows.push(GistRow {
        signal: "headline".into(),
        rouge1: r1,
        rouge_l: rl,
    });
    for backend in summarizers {
        let summaries = chosen
            .iter()
            .map(|a| summarize(*backend, &a.body).map(|s| s.text))
            .collect::<Result<Vec<_>, _>>()?;
        let (r1, rl) = score(&summaries);
        rows.push(GistRow {
            signal: backend.name().to_string(),
            rouge1: r1,
            rouge_l: rl,
        });
    }
    Ok(GistReport {
        sample_size: chosen.len(),
        rows,
    })
}
