//! Veracity classification: model inputs, dataset splitting, a hashed
//! linear-softmax reference classifier, the training loop and F1/LA metrics.

mod features;
mod linear;
mod metrics;
mod train;

pub use features::{featurize_concat, featurize_content, CONTENT_WORDS, NO_EVIDENCE, SEP};
pub use linear::{HashedLinearClassifier, LinearParams, ModelSnapshot, SNAPSHOT_VERSION};
pub use metrics::{evaluate, evaluate_predictions, ClassMetrics, EvalReport};
pub use train::{split_dataset, train, EpochLog, Split, TrainConfig, TrainingLog};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VeracityLabel;

pub const NUM_CLASSES: usize = 4;

pub type Probabilities = [f64; NUM_CLASSES];

#[derive(Debug, Error)]
pub enum VeracityError {
    #[error("model input is empty")]
    EmptyInput,
    #[error("claim text is empty")]
    EmptyClaim,
    #[error("need at least {need} items to split, got {got}")]
    TooFewItems { need: usize, got: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("classifier has no trained parameters")]
    Untrained,
    #[error("bad model snapshot: {0}")]
    BadSnapshot(String),
}

/// One classifier input with its gold label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub label: VeracityLabel,
}

impl Example {
    pub fn new(text: impl Into<String>, label: VeracityLabel) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }
}

pub trait ClassifierBackend: Send + Sync {
    fn name(&self) -> &str;

    fn num_classes(&self) -> usize {
        NUM_CLASSES
    }

    /// Class probabilities in label-code order; sums to 1.
    fn predict_proba(&self, input: &str) -> Result<Probabilities, VeracityError>;

    fn predict(&self, input: &str) -> Result<VeracityLabel, VeracityError> {
        let p = self.predict_proba(input)?;
        Ok(argmax_label(&p))
    }
}

/// Highest-probability label; ties go to the lower code.
pub fn argmax_label(p: &Probabilities) -> VeracityLabel {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if p[c] > p[best] {
            best = c;
        }
    }
    VeracityLabel::ALL[best]
}

/// A classifier that the training loop can fit.
pub trait Trainable: ClassifierBackend {
    type Snapshot: Clone;

    /// One gradient step on `batch`.
    fn step(&mut self, batch: &[&Example], learning_rate: f64, l2: f64);
    /// Mean cross-entropy (plus regularization) over `examples`.
    fn loss(&self, examples: &[Example], l2: f64) -> f64;
    fn snapshot(&self) -> Self::Snapshot;
    fn restore(&mut self, snapshot: Self::Snapshot);
}
