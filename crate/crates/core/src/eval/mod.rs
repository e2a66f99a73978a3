//! Entity-level scoring and the model comparison experiments.

mod experiment;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use experiment::{
    run_comparison, run_longdistance, second_entity_accuracy, ExperimentReport, ExperimentRow,
    LongDistanceConfig,
};

use crate::corpus::{extract_chunks, validate_iob2, Chunk, RepairMode, Sentence};
use crate::error::{Error, Result};

/// Chunk counts with derived precision, recall and F1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.correct, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.correct, self.gold)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    fn add(&mut self, other: Counts) {
        self.gold += other.gold;
        self.predicted += other.predicted;
        self.correct += other.correct;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Exact-span, exact-type chunk scores, micro-averaged overall.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub overall: Counts,
    pub per_type: BTreeMap<String, Counts>,
}

impl ScoreReport {
    pub fn precision(&self) -> f64 {
        self.overall.precision()
    }

    pub fn recall(&self) -> f64 {
        self.overall.recall()
    }

    pub fn f1(&self) -> f64 {
        self.overall.f1()
    }

    pub fn to_table(&self, per_type: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16}  {:>6}  {:>6}  {:>7}  {:>9}  {:>9}  {:>9}",
            "type", "gold", "pred", "correct", "precision", "recall", "f1"
        );
        let mut row = |name: &str, c: &Counts| {
            let _ = writeln!(
                out,
                "{:<16}  {:>6}  {:>6}  {:>7}  {:>9.4}  {:>9.4}  {:>9.4}",
                name,
                c.gold,
                c.predicted,
                c.correct,
                c.precision(),
                c.recall(),
                c.f1()
            );
        };
        if per_type {
            for (ty, c) in &self.per_type {
                row(ty, c);
            }
        }
        row("overall", &self.overall);
        out
    }
}

fn chunks_of(labels: &[String]) -> Result<Vec<Chunk>> {
    extract_chunks(&validate_iob2(labels, RepairMode::Repair, None)?)
}

/// Scores predicted label sequences against gold sentences. Both sides are
/// repaired before chunk extraction.
pub fn score(gold: &[Sentence], predicted: &[Vec<String>]) -> Result<ScoreReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Alignment {
            sentence: gold.len().min(predicted.len()),
            message: format!(
                "{} gold sentences but {} predicted sequences",
                gold.len(),
                predicted.len()
            ),
        });
    }
    let mut report = ScoreReport::default();
    for (i, (sentence, pred)) in gold.iter().zip(predicted).enumerate() {
        let labels = sentence.labels.as_ref().ok_or_else(|| Error::Alignment {
            sentence: i,
            message: "gold sentence has no labels".into(),
        })?;
        if pred.len() != labels.len() {
            return Err(Error::Alignment {
                sentence: i,
                message: format!("{} predicted labels for {} tokens", pred.len(), labels.len()),
            });
        }
        let gold_chunks = chunks_of(labels)?;
        let pred_chunks = chunks_of(pred)?;
        let gold_set: HashSet<&Chunk> = gold_chunks.iter().collect();
        for c in &gold_chunks {
            report.per_type.entry(c.entity_type.clone()).or_default().gold += 1;
        }
        for c in &pred_chunks {
            let entry = report.per_type.entry(c.entity_type.clone()).or_default();
            entry.predicted += 1;
            if gold_set.contains(c) {
                entry.correct += 1;
            }
        }
    }
    for c in report.per_type.values() {
        report.overall.add(*c);
    }
    Ok(report)
}
