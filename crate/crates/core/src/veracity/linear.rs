use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::SEP;
use super::{ClassifierBackend, Example, Probabilities, Trainable, VeracityError, NUM_CLASSES};
use crate::corpus::VeracityLabel;
use crate::encode::token_bucket;
use crate::textproc::tokenize;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Weights (`NUM_CLASSES × dimension`, row-major) and per-class bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub dimension: usize,
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
}

impl LinearParams {
    pub fn zeros(dimension: usize) -> Self {
        Self {
            dimension,
            weights: vec![0.0; NUM_CLASSES * dimension],
            bias: [0.0; NUM_CLASSES],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + NUM_CLASSES
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view: weights then bias.
    pub fn get(&self, i: usize) -> f64 {
        if i < self.weights.len() {
            self.weights[i]
        } else {
            self.bias[i - self.weights.len()]
        }
    }

    pub fn set(&mut self, i: usize, v: f64) {
        if i < self.weights.len() {
            self.weights[i] = v;
        } else {
            let j = i - self.weights.len();
            self.bias[j] = v;
        }
    }

    fn logits(&self, features: &[(usize, f64)]) -> [f64; NUM_CLASSES] {
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &self.weights[c * self.dimension..(c + 1) * self.dimension];
            *zc += features.iter().map(|&(j, x)| row[j] * x).sum::<f64>();
        }
        z
    }
}

fn softmax(z: [f64; NUM_CLASSES]) -> Probabilities {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = z.map(|v| (v - max).exp());
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    p
}

/// Linear softmax over hashed bag-of-token features.
///
/// Tokens before the first `[SEP]` and after it hash with different seeds,
/// so claim and evidence words occupy separate feature slots. Counts are
/// L2-normalized.
#[derive(Debug, Clone)]
pub struct HashedLinearClassifier {
    seed: u64,
    params: LinearParams,
    loaded: bool,
}

impl HashedLinearClassifier {
    /// Untrained: prediction fails until parameters are trained or loaded.
    pub fn new(dimension: usize, seed: u64) -> Self {
        Self {
            seed,
            params: LinearParams::zeros(dimension),
            loaded: false,
        }
    }

    pub fn from_params(params: LinearParams, seed: u64) -> Self {
        Self {
            seed,
            params,
            loaded: true,
        }
    }

    pub fn params(&self) -> &LinearParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.params.dimension
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sparse normalized features, sorted by index.
    pub fn features(&self, text: &str) -> Vec<(usize, f64)> {
        let dim = self.params.dimension;
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        let (first, rest) = match text.find(SEP) {
            Some(i) => (&text[..i], &text[i + SEP.len()..]),
            None => (text, ""),
        };
        for (segment, part) in [first, rest].into_iter().enumerate() {
            let seed = self.seed.wrapping_add(segment as u64);
            for t in tokenize(part).tokens() {
                *counts.entry(token_bucket(t, dim, seed)).or_default() += 1.0;
            }
        }
        let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
        counts.into_iter().map(|(j, v)| (j, v / norm)).collect()
    }

    fn probs(params: &LinearParams, features: &[(usize, f64)]) -> Probabilities {
        softmax(params.logits(features))
    }

    /// Mean cross-entropy plus `l2/2 · ‖W‖²` for arbitrary parameters.
    pub fn loss_with(&self, params: &LinearParams, examples: &[Example], l2: f64) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let ce: f64 = examples
            .iter()
            .map(|ex| {
                let p = Self::probs(params, &self.features(&ex.text));
                -p[ex.label.code()].max(f64::MIN_POSITIVE).ln()
            })
            .sum::<f64>()
            / examples.len() as f64;
        ce + 0.5 * l2 * params.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Analytic gradient of [`Self::loss_with`] at the current parameters.
    pub fn gradient(&self, examples: &[&Example], l2: f64) -> LinearParams {
        let dim = self.params.dimension;
        let mut g = LinearParams::zeros(dim);
        let n = examples.len().max(1) as f64;
        for ex in examples {
            let x = self.features(&ex.text);
            let p = Self::probs(&self.params, &x);
            for c in 0..NUM_CLASSES {
                let delta = (p[c] - if c == ex.label.code() { 1.0 } else { 0.0 }) / n;
                g.bias[c] += delta;
                for &(j, v) in &x {
                    g.weights[c * dim + j] += delta * v;
                }
            }
        }
        for (gw, w) in g.weights.iter_mut().zip(&self.params.weights) {
            *gw += l2 * w;
        }
        g
    }

    pub fn to_snapshot(&self) -> ModelSnapshot {
        let dim = self.params.dimension;
        ModelSnapshot {
            version: SNAPSHOT_VERSION,
            backend: "hashed_linear".into(),
            dimension: dim,
            seed: self.seed,
            classes: VeracityLabel::ALL.iter().map(|l| l.to_string()).collect(),
            weights: self.params.weights.chunks(dim).map(<[f64]>::to_vec).collect(),
            bias: self.params.bias.to_vec(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn from_snapshot(s: &ModelSnapshot) -> Result<Self, VeracityError> {
        let bad = |m: &str| VeracityError::BadSnapshot(m.to_string());
        if s.version != SNAPSHOT_VERSION {
            return Err(bad(&format!("unsupported version {}", s.version)));
        }
        if s.backend != "hashed_linear" {
            return Err(bad(&format!("unknown backend {:?}", s.backend)));
        }
        let expected: Vec<String> = VeracityLabel::ALL.iter().map(|l| l.to_string()).collect();
        if s.classes != expected {
            return Err(bad("class order must be false, partial_true, true, nei"));
        }
        if s.dimension == 0
            || s.weights.len() != NUM_CLASSES
            || s.weights.iter().any(|r| r.len() != s.dimension)
            || s.bias.len() != NUM_CLASSES
        {
            return Err(bad("parameter shapes do not match dimension"));
        }
        let mut bias = [0.0; NUM_CLASSES];
        bias.copy_from_slice(&s.bias);
        Ok(Self::from_params(
            LinearParams {
                dimension: s.dimension,
                weights: s.weights.concat(),
                bias,
            },
            s.seed,
        ))
    }
}

impl ClassifierBackend for HashedLinearClassifier {
    fn name(&self) -> &str {
        "hashed_linear"
    }

    fn predict_proba(&self, input: &str) -> Result<Probabilities, VeracityError> {
        if !self.loaded {
            return Err(VeracityError::Untrained);
        }
        let x = self.features(input);
        if x.is_empty() {
            return Err(VeracityError::EmptyInput);
        }
        Ok(Self::probs(&self.params, &x))
    }
}

impl Trainable for HashedLinearClassifier {
    type Snapshot = LinearParams;

    fn step(&mut self, batch: &[&Example], learning_rate: f64, l2: f64) {
        let g = self.gradient(batch, l2);
        for (w, gw) in self.params.weights.iter_mut().zip(&g.weights) {
            *w -= learning_rate * gw;
        }
        for (b, gb) in self.params.bias.iter_mut().zip(&g.bias) {
            *b -= learning_rate * gb;
        }
        self.loaded = true;
    }

    fn loss(&self, examples: &[Example], l2: f64) -> f64 {
        self.loss_with(&self.params, examples, l2)
    }

    fn snapshot(&self) -> LinearParams {
        self.params.clone()
    }

    fn restore(&mut self, snapshot: LinearParams) {
        self.params = snapshot;
        self.loaded = true;
    }
}

/// On-disk form of a trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub version: u32,
    pub backend: String,
    pub dimension: usize,
    pub seed: u64,
    /// Class names in label-code order.
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Free-form provenance (input kind, split seed, epochs...).
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}
