//! Penalized maximum-likelihood training and iteration timing.

mod lbfgs;
mod timing;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use lbfgs::{minimize, LbfgsParams, Minimum, Step, Termination};
pub use timing::{measure_iteration_cost, TimingRow, TimingTable};

use crate::corpus::Sentence;
use crate::crf::{log_likelihood_and_gradient, prepare_instances, ModelOrder, StateSpace};
use crate::error::{Error, Result};
use crate::features::{build_feature_index, TemplateConfig};
use crate::induction::LabelAlphabet;
use crate::model::Model;
use crate::parallel::Executor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub order: ModelOrder,
    pub template: TemplateConfig,
    /// Gaussian prior variance σ².
    pub l2_variance: f64,
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub history: usize,
    /// Recorded for reproducibility; training itself is deterministic.
    pub seed: u64,
    /// Worker count for the batch gradient.
    pub threads: usize,
    /// Forbid impossible carrier transitions when decoding pre-induced models.
    pub decode_constraints: bool,
}

impl TrainConfig {
    pub fn new(order: ModelOrder, template: TemplateConfig) -> Self {
        Self {
            order,
            template,
            l2_variance: 10.0,
            max_iterations: 500,
            relative_tolerance: 1e-6,
            history: 7,
            seed: 0,
            threads: 1,
            decode_constraints: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.l2_variance > 0.0
            && !self.l2_variance.is_nan()
            && self.relative_tolerance > 0.0
            && self.max_iterations > 0
            && self.history > 0
            && self.threads > 0;
        if !positive {
            return Err(Error::InvalidConfig(
                "l2 variance, tolerance, iteration limit, history and threads must be positive".into(),
            ));
        }
        self.template.validate()
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new(ModelOrder::First, TemplateConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Penalized log-likelihood (maximized).
    pub objective: f64,
    pub gradient_norm: f64,
    pub gradient_max_norm: f64,
    /// Objective/gradient evaluations spent in this iteration.
    pub evaluations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub order: ModelOrder,
    pub state_count: usize,
    pub parameter_count: usize,
    pub threads: usize,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub final_objective: f64,
    pub final_gradient_max_norm: f64,
}

impl TrainReport {
    pub fn total_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn mean_seconds_per_iteration(&self) -> f64 {
        mean_seconds(&self.records)
    }

    /// Aligned plain-text table, one row per iteration.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# order={} states={} params={} threads={} termination={}",
            self.order,
            self.state_count,
            self.parameter_count,
            self.threads,
            self.termination.as_str()
        );
        let _ = writeln!(
            out,
            "{:>5}  {:>18}  {:>12}  {:>12}  {:>5}  {:>10}",
            "iter", "objective", "|grad|", "max|grad|", "evals", "seconds"
        );
        for r in &self.records {
            let _ = writeln!(
                out,
                "{:>5}  {:>18.6}  {:>12.4e}  {:>12.4e}  {:>5}  {:>10.6}",
                r.iteration, r.objective, r.gradient_norm, r.gradient_max_norm, r.evaluations, r.seconds
            );
        }
        let _ = writeln!(
            out,
            "# iterations={} mean_s_per_iteration={:.6}",
            self.total_iterations(),
            self.mean_seconds_per_iteration()
        );
        out
    }

    /// One JSON record per iteration.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }
}

pub(crate) fn mean_seconds(records: &[IterationRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| r.seconds).sum::<f64>() / records.len() as f64
}

/// Trains a model from zero weights. Pre-induced targets are induced from
/// the base labels internally.
pub fn train(corpus: &[Sentence], config: &TrainConfig, alphabet: &LabelAlphabet) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if corpus.iter().all(Sentence::is_empty) {
        return Err(Error::InvalidConfig("training corpus is empty".into()));
    }
    let space = StateSpace::for_order(alphabet, config.order, false);
    if space.is_empty() {
        return Err(Error::InvalidConfig("empty state set".into()));
    }
    let index = build_feature_index(corpus, &config.template, alphabet, config.order)?;
    let exec = Executor::with_threads(config.threads)?;
    let instances = prepare_instances(corpus, &config.template, &index, alphabet, &space, &exec)?;
    let dim = index.param_count() + space.transition_param_count();

    let params = LbfgsParams {
        history: config.history,
        max_iterations: config.max_iterations,
        relative_tolerance: config.relative_tolerance,
        ..LbfgsParams::default()
    };
    let mut records = Vec::new();
    let minimum = minimize(
        vec![0.0; dim],
        &params,
        |w| {
            let (objective, mut grad) =
                log_likelihood_and_gradient(&instances, w, &index, &space, config.l2_variance, &exec)?;
            grad.iter_mut().for_each(|g| *g = -*g);
            Ok((-objective, grad))
        },
        |step| {
            records.push(IterationRecord {
                iteration: step.iteration,
                objective: -step.value,
                gradient_norm: step.gradient_norm,
                gradient_max_norm: step.gradient_max_norm,
                evaluations: step.evaluations,
                seconds: step.seconds,
            })
        },
    )?;

    let report = TrainReport {
        order: config.order,
        state_count: space.regular_state_count(),
        parameter_count: dim,
        threads: exec.threads(),
        records,
        termination: minimum.termination,
        final_objective: -minimum.value,
        final_gradient_max_norm: minimum.gradient.iter().fold(0.0, |m, g| m.max(g.abs())),
    };
    let model = Model::new(
        config.order,
        alphabet.clone(),
        config.template.clone(),
        index,
        minimum.x,
        config.decode_constraints,
    )?;
    Ok((model, report))
}
