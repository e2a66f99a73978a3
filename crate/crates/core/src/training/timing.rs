use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{mean_seconds, train, TrainConfig};
use crate::corpus::Sentence;
use crate::crf::ModelOrder;
use crate::error::{Error, Result};
use crate::induction::LabelAlphabet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub order: ModelOrder,
    pub state_count: usize,
    pub parameter_count: usize,
    /// Iterations that entered the mean (warm-up excluded).
    pub measured_iterations: usize,
    pub mean_seconds: f64,
    pub mean_evaluations: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub threads: usize,
    pub warmup: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingTable {
    pub fn row(&self, order: ModelOrder) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.order == order)
    }

    /// `mean(numerator) / mean(denominator)` in seconds per iteration.
    pub fn ratio(&self, numerator: ModelOrder, denominator: ModelOrder) -> Option<f64> {
        Some(self.row(numerator)?.mean_seconds / self.row(denominator)?.mean_seconds)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# threads={} warmup={}", self.threads, self.warmup);
        let _ = writeln!(
            out,
            "{:<12}  {:>7}  {:>9}  {:>6}  {:>12}  {:>7}",
            "order", "states", "params", "iters", "s/iteration", "evals"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12}  {:>7}  {:>9}  {:>6}  {:>12.6}  {:>7.2}",
                r.order.as_str(),
                r.state_count,
                r.parameter_count,
                r.measured_iterations,
                r.mean_seconds,
                r.mean_evaluations
            );
        }
        for (i, a) in self.rows.iter().enumerate() {
            for b in &self.rows[i + 1..] {
                let _ = writeln!(
                    out,
                    "# ratio {}/{} = {:.3}",
                    b.order,
                    a.order,
                    b.mean_seconds / a.mean_seconds
                );
            }
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

/// Trains each configuration for `warmup + measured` iterations, one at a
/// time, and averages wall-clock seconds over the post-warm-up iterations.
///
/// The configurations must be identical apart from the model order.
pub fn measure_iteration_cost(
    corpus: &[Sentence],
    configs: &[TrainConfig],
    alphabet: &LabelAlphabet,
    warmup: usize,
    measured: usize,
) -> Result<TimingTable> {
    if configs.len() < 2 {
        return Err(Error::InvalidConfig("timing needs at least two configurations".into()));
    }
    if measured < 3 {
        return Err(Error::InvalidConfig("at least three measured iterations are required".into()));
    }
    let reference = &configs[0];
    for c in configs {
        let mut same = c.clone();
        same.order = reference.order;
        if &same != reference {
            return Err(Error::InvalidConfig(
                "timing configurations may differ only in model order".into(),
            ));
        }
    }

    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let mut config = config.clone();
        config.max_iterations = warmup + measured;
        config.relative_tolerance = f64::MIN_POSITIVE;
        let (_, report) = train(corpus, &config, alphabet)?;
        let kept = report.records.get(warmup..).unwrap_or(&[]);
        if kept.len() < 3 {
            return Err(Error::InvalidConfig(format!(
                "{} training stopped after {} iterations; fewer than 3 remain after warm-up",
                config.order,
                report.total_iterations()
            )));
        }
        rows.push(TimingRow {
            order: config.order,
            state_count: report.state_count,
            parameter_count: report.parameter_count,
            measured_iterations: kept.len(),
            mean_seconds: mean_seconds(kept),
            mean_evaluations: kept.iter().map(|r| r.evaluations as f64).sum::<f64>() / kept.len() as f64,
        });
    }
    Ok(TimingTable {
        threads: reference.threads,
        warmup,
        rows,
    })
}
