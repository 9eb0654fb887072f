use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate;
use super::{Example, Trainable, VeracityError};

pub const MIN_SPLIT_ITEMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub train_ratio: f64,
    pub validation_ratio: f64,
    pub test_ratio: f64,
    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    /// Reshuffle the training set every epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            train_ratio: 0.8,
            validation_ratio: 0.1,
            test_ratio: 0.1,
            seed: 0,
            learning_rate: 0.5,
            batch_size: 8,
            l2: 0.0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), VeracityError> {
        let bad = |m: String| Err(VeracityError::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        let ratios = [self.train_ratio, self.validation_ratio, self.test_ratio];
        if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad(format!("split ratios out of range: {ratios:?}"));
        }
        if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split ratios must sum to 1, got {ratios:?}"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if self.l2 < 0.0 {
            return bad("l2 must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

fn part_size(ratio: f64, n: usize) -> usize {
    (ratio * n as f64 + 1e-9).floor() as usize
}

/// Seeded shuffle, then `floor(ratio·N)` items each to validation and test;
/// the remainder goes to train.
pub fn split_dataset<T>(items: Vec<T>, config: &TrainConfig) -> Result<Split<T>, VeracityError> {
    let ratios_ok = (config.train_ratio + config.validation_ratio + config.test_ratio - 1.0).abs()
        <= 1e-9;
    if !ratios_ok {
        return Err(VeracityError::InvalidConfig("split ratios must sum to 1".into()));
    }
    let n = items.len();
    if n < MIN_SPLIT_ITEMS {
        return Err(VeracityError::TooFewItems {
            need: MIN_SPLIT_ITEMS,
            got: n,
        });
    }
    let mut items = items;
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let n_val = part_size(config.validation_ratio, n);
    let n_test = part_size(config.test_ratio, n);
    let test = items.split_off(n - n_test);
    let validation = items.split_off(n - n_test - n_val);
    Ok(Split {
        train: items,
        validation,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub single_class: bool,
}

impl TrainingLog {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map(|e| e.train_loss).unwrap_or(f64::NAN)
    }
}

/// Runs exactly `config.epochs` epochs of mini-batch gradient descent and
/// leaves `model` at the epoch with the best validation accuracy (later
/// epochs win ties). Without a validation set the last epoch is kept.
pub fn train<M: Trainable>(
    model: &mut M,
    train_set: &[Example],
    validation_set: &[Example],
    config: &TrainConfig,
) -> Result<TrainingLog, VeracityError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(VeracityError::EmptyTrainingSet);
    }
    let single_class = train_set.iter().all(|e| e.label == train_set[0].label);
    if single_class {
        log::warn!("training set has a single class ({})", train_set[0].label);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, M::Snapshot)> = None;

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train_set[i]).collect();
            model.step(&batch, config.learning_rate, config.l2);
        }
        let train_loss = model.loss(train_set, config.l2);
        let train_accuracy = evaluate(model, train_set)?.label_accuracy;
        let validation_accuracy = if validation_set.is_empty() {
            None
        } else {
            Some(evaluate(model, validation_set)?.label_accuracy)
        };
        log::info!(
            "epoch {epoch}: loss {train_loss:.6} train LA {train_accuracy:.4} val LA {}",
            validation_accuracy.map_or("-".to_string(), |v| format!("{v:.4}"))
        );
        let score = validation_accuracy.unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(s, _, _)| score >= *s) {
            best = Some((score, epoch, model.snapshot()));
        }
        epochs.push(EpochLog {
            epoch,
            train_loss,
            train_accuracy,
            validation_accuracy,
        });
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    model.restore(params);
    Ok(TrainingLog {
        epochs,
        best_epoch,
        single_class,
    })
}
