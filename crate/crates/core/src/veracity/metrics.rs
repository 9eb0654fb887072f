use serde::{Deserialize, Serialize};

use super::{ClassifierBackend, Example, VeracityError, NUM_CLASSES};
use crate::corpus::VeracityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: VeracityLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Neither in gold nor predicted; contributes F1 = 0 to the macro mean.
    pub absent: bool,
}

/// Macro-averaged F1 (unweighted over all four classes) and label accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub label_accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][predicted]`.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate_predictions(
    gold: &[VeracityLabel],
    predicted: &[VeracityLabel],
) -> Result<EvalReport, VeracityError> {
    if gold.is_empty() {
        return Err(VeracityError::EmptyEvalSet);
    }
    assert_eq!(gold.len(), predicted.len(), "gold and predictions differ in length");
    let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for (g, p) in gold.iter().zip(predicted) {
        confusion[g.code()][p.code()] += 1;
    }
    let total = gold.len();
    let correct: usize = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();

    let per_class: Vec<ClassMetrics> = VeracityLabel::ALL
        .iter()
        .map(|&label| {
            let c = label.code();
            let tp = confusion[c][c];
            let gold_c: usize = confusion[c].iter().sum();
            let pred_c: usize = (0..NUM_CLASSES).map(|g| confusion[g][c]).sum();
            let precision = ratio(tp, pred_c);
            let recall = ratio(tp, gold_c);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support: gold_c,
                absent: gold_c == 0 && pred_c == 0,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / NUM_CLASSES as f64;

    Ok(EvalReport {
        macro_f1,
        label_accuracy: ratio(correct, total),
        per_class,
        confusion,
        total,
    })
}

pub fn evaluate<C: ClassifierBackend + ?Sized>(
    model: &C,
    test_set: &[Example],
) -> Result<EvalReport, VeracityError> {
    let predicted = test_set
        .iter()
        .map(|ex| model.predict(&ex.text))
        .collect::<Result<Vec<_>, _>>()?;
    let gold: Vec<VeracityLabel> = test_set.iter().map(|e| e.label).collect();
    evaluate_predictions(&gold, &predicted)
}

impl EvalReport {
    /// Plain-text table: summary line, per-class rows, confusion matrix.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "n={}  LA={:.2}  macro-F1={:.2}\n\n{:<14}{:>10}{:>10}{:>10}{:>9}\n",
            self.total,
            self.label_accuracy * 100.0,
            self.macro_f1 * 100.0,
            "class",
            "precision",
            "recall",
            "f1",
            "support"
        );
        for m in &self.per_class {
            out.push_str(&format!(
                "{:<14}{:>10.4}{:>10.4}{:>10.4}{:>9}{}\n",
                m.label.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support,
                if m.absent { "  (absent)" } else { "" }
            ));
        }
        out.push_str("\nconfusion (rows gold, cols predicted)\n");
        for (g, row) in self.confusion.iter().enumerate() {
            out.push_str(&format!("{:<14}", VeracityLabel::ALL[g].as_str()));
            for v in row {
                out.push_str(&format!("{v:>8}"));
            }
            out.push('\n');
        }
        out
    }
}
