use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{score, ScoreReport};
use crate::corpus::{
    bayes_chance_level, extract_chunks, generate_synthetic, validate_iob2, GapDistribution,
    RepairMode, Sentence, SynthConfig, Tag,
};
use crate::crf::ModelOrder;
use crate::error::{Error, Result};
use crate::features::{FeatureSet, TemplateConfig};
use crate::induction::LabelAlphabet;
use crate::parallel::Executor;
use crate::training::{train, Termination, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub order: ModelOrder,
    pub feature_set: FeatureSet,
    pub scores: ScoreReport,
    pub mean_seconds_per_iteration: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Only set by the long-distance experiment.
    pub second_entity_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub corpus: String,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub config: TrainConfig,
    pub rows: Vec<ExperimentRow>,
    /// Best second-entity accuracy without access to the precursor.
    pub chance_level: Option<f64>,
}

impl ExperimentReport {
    pub fn row(&self, order: ModelOrder, set: FeatureSet) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.order == order && r.feature_set == set)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# corpus={} train={} test={} l2_variance={} threads={}",
            self.corpus,
            self.train_sentences,
            self.test_sentences,
            self.config.l2_variance,
            self.config.threads
        );
        let _ = writeln!(
            out,
            "{:<12}  {:>4}  {:>9}  {:>9}  {:>9}  {:>12}  {:>6}  {:>10}",
            "order", "set", "precision", "recall", "f1", "s/iteration", "iters", "2nd-entity"
        );
        for r in &self.rows {
            let second = r
                .second_entity_accuracy
                .map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                out,
                "{:<12}  {:>4}  {:>9.2}  {:>9.2}  {:>9.2}  {:>12.6}  {:>6}  {:>10}",
                r.order.as_str(),
                r.feature_set.id(),
                100.0 * r.scores.precision(),
                100.0 * r.scores.recall(),
                100.0 * r.scores.f1(),
                r.mean_seconds_per_iteration,
                r.iterations,
                second
            );
        }
        if let Some(chance) = self.chance_level {
            let _ = writeln!(out, "# second-entity chance level = {chance:.4}");
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
            .collect()
    }
}

fn shared_alphabet(train: &[Sentence], test: &[Sentence]) -> Result<LabelAlphabet> {
    let all: Vec<Sentence> = train.iter().chain(test).cloned().collect();
    LabelAlphabet::from_corpus(&all)
}

fn run_cell(
    train_corpus: &[Sentence],
    test_corpus: &[Sentence],
    alphabet: &LabelAlphabet,
    config: &TrainConfig,
    exec: &Executor,
) -> Result<(ExperimentRow, Vec<Vec<String>>)> {
    let (model, report) = train(train_corpus, config, alphabet)?;
    let predicted = model.tag_corpus(test_corpus, exec)?;
    let scores = score(test_corpus, &predicted)?;
    let row = ExperimentRow {
        order: config.order,
        feature_set: config.template.set,
        scores,
        mean_seconds_per_iteration: report.mean_seconds_per_iteration(),
        iterations: report.total_iterations(),
        termination: report.termination,
        second_entity_accuracy: None,
    };
    Ok((row, predicted))
}

fn cell_name(order: ModelOrder, set: FeatureSet) -> String {
    format!("{order}/set{}", set.id())
}

/// Trains and scores every `(order, feature set)` cell. Cells run one at a
/// time so their timings do not interfere.
pub fn run_comparison(
    train_corpus: &[Sentence],
    test_corpus: &[Sentence],
    orders: &[ModelOrder],
    feature_sets: &[FeatureSet],
    base: &TrainConfig,
    corpus_id: &str,
) -> Result<ExperimentReport> {
    let alphabet = shared_alphabet(train_corpus, test_corpus)?;
    let exec = Executor::with_threads(base.threads)?;
    let mut rows = Vec::with_capacity(orders.len() * feature_sets.len());
    for &set in feature_sets {
        for &order in orders {
            let mut config = base.clone();
            config.order = order;
            config.template.set = set;
            let (row, _) = run_cell(train_corpus, test_corpus, &alphabet, &config, &exec).map_err(|e| {
                Error::Experiment {
                    cell: cell_name(order, set),
                    source: Box::new(e),
                }
            })?;
            rows.push(row);
        }
    }
    Ok(ExperimentReport {
        corpus: corpus_id.to_string(),
        train_sentences: train_corpus.len(),
        test_sentences: test_corpus.len(),
        config: base.clone(),
        rows,
        chance_level: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongDistanceConfig {
    pub synth: SynthConfig,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub orders: Vec<ModelOrder>,
    pub train: TrainConfig,
}

impl Default for LongDistanceConfig {
    fn default() -> Self {
        let mut synth = SynthConfig::new(2);
        synth.gap = GapDistribution::Uniform { min: 2, max: 6 };
        synth.seed = 7;
        Self {
            synth,
            train_sentences: 2000,
            test_sentences: 500,
            orders: vec![ModelOrder::First, ModelOrder::PreInduced],
            train: TrainConfig::new(ModelOrder::First, TemplateConfig::new(FeatureSet::One)),
        }
    }
}

/// Fraction of sentences whose second gold entity is predicted with the
/// right type at its first token. Sentences with fewer than two gold
/// entities are skipped.
pub fn second_entity_accuracy(gold: &[Sentence], predicted: &[Vec<String>]) -> Result<f64> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for (i, (sentence, pred)) in gold.iter().zip(predicted).enumerate() {
        let labels = sentence.labels.as_ref().ok_or_else(|| Error::Alignment {
            sentence: i,
            message: "gold sentence has no labels".into(),
        })?;
        let chunks = extract_chunks(&validate_iob2(labels, RepairMode::Repair, None)?)?;
        let Some(second) = chunks.get(1) else { continue };
        let label = pred.get(second.start).ok_or_else(|| Error::Alignment {
            sentence: i,
            message: "prediction shorter than sentence".into(),
        })?;
        total += 1;
        if Tag::parse(label)?.entity_type() == Some(second.entity_type.as_str()) {
            correct += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Trains each order on synthetic data in which the second entity's type is
/// determined only by the first entity, several outside tokens earlier.
pub fn run_longdistance(config: &LongDistanceConfig) -> Result<ExperimentReport> {
    let radius = config.train.template.window_radius();
    let min_gap = config.synth.gap.min_gap();
    if radius >= min_gap {
        return Err(Error::InvalidConfig(format!(
            "window radius {radius} reaches across the minimum gap {min_gap}"
        )));
    }
    if config.train_sentences == 0 || config.test_sentences == 0 {
        return Err(Error::InvalidConfig("train and test sizes must be positive".into()));
    }
    let mut synth = config.synth.clone();
    synth.sentences = config.train_sentences + config.test_sentences;
    let corpus = generate_synthetic(&synth)?;
    let (train_corpus, test_corpus) = corpus.split_at(config.train_sentences);
    let alphabet = LabelAlphabet::new(&synth.type_names())?;
    let exec = Executor::with_threads(config.train.threads)?;

    let mut rows = Vec::with_capacity(config.orders.len());
    for &order in &config.orders {
        let mut train_config = config.train.clone();
        train_config.order = order;
        let set = train_config.template.set;
        let wrap = |e| Error::Experiment {
            cell: cell_name(order, set),
            source: Box::new(e),
        };
        let (mut row, predicted) =
            run_cell(train_corpus, test_corpus, &alphabet, &train_config, &exec).map_err(wrap)?;
        row.second_entity_accuracy = Some(second_entity_accuracy(test_corpus, &predicted).map_err(wrap)?);
        rows.push(row);
    }
    Ok(ExperimentReport {
        corpus: format!(
            "synthetic(E={}, gap={:?}, seed={})",
            synth.entity_type_count, synth.gap, synth.seed
        ),
        train_sentences: train_corpus.len(),
        test_sentences: test_corpus.len(),
        config: config.train.clone(),
        rows,
        chance_level: Some(bayes_chance_level(&synth)?),
    })
}
