use super::lattice::{build_lattice, forward_backward};
use super::states::{ModelOrder, StateSpace};
use crate::corpus::{validate_iob2, RepairMode, Sentence};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureIndex, IndexedFeatures, TemplateConfig};
use crate::induction::{induce, Label, LabelAlphabet};
use crate::parallel::Executor;

/// One training sentence: indexed features and its gold state path.
#[derive(Clone, Debug)]
pub struct Instance {
    pub features: IndexedFeatures,
    pub gold: Vec<usize>,
}

/// Maps base IOB2 labels to the gold state path of `space`.
///
/// Labels are repaired first (orphan `I-t` becomes `B-t`). Pre-induced
/// targets are the induced sequence; second-order targets are label pairs
/// starting from the `<start>` pair.
pub fn gold_states<S: AsRef<str>>(
    labels: &[S],
    alphabet: &LabelAlphabet,
    space: &StateSpace,
    sentence: usize,
) -> Result<Vec<usize>> {
    let repaired = validate_iob2(labels, RepairMode::Repair, None)?;
    let mut parsed = Vec::with_capacity(repaired.len());
    for (position, label) in repaired.iter().enumerate() {
        match alphabet.parse(label) {
            Ok(l @ (Label::Begin(_) | Label::Inside(_) | Label::Outside)) => parsed.push(l),
            _ => {
                return Err(Error::GoldState {
                    sentence,
                    position,
                    label: label.clone(),
                })
            }
        }
    }
    Ok(match space.order() {
        ModelOrder::First => parsed.iter().map(|&l| alphabet.index(l)).collect(),
        ModelOrder::PreInduced => induce(&parsed)?
            .into_iter()
            .map(|l| alphabet.index(l))
            .collect(),
        ModelOrder::Second => {
            let n = alphabet.base_len();
            let base: Vec<usize> = parsed.iter().map(|&l| alphabet.index(l)).collect();
            base.iter()
                .enumerate()
                .map(|(t, &b)| if t == 0 { n * n + b } else { base[t - 1] * n + b })
                .collect()
        }
    })
}

/// Extracts, indexes and converts a labelled corpus. Empty sentences are
/// skipped.
pub fn prepare_instances(
    corpus: &[Sentence],
    template: &TemplateConfig,
    index: &FeatureIndex,
    alphabet: &LabelAlphabet,
    space: &StateSpace,
    exec: &Executor,
) -> Result<Vec<Instance>> {
    let numbered: Vec<(usize, &Sentence)> =
        corpus.iter().enumerate().filter(|(_, s)| !s.is_empty()).collect();
    exec.map(&numbered, |&(i, sentence)| {
        let labels = sentence.labels.as_ref().ok_or_else(|| Error::Alignment {
            sentence: i,
            message: "training sentence has no gold labels".into(),
        })?;
        let gold = gold_states(labels, alphabet, space, i)?;
        let features = index.index_positions(&extract_features(sentence, template));
        Ok(Instance { features, gold })
    })
    .into_iter()
    .collect()
}

/// Log-likelihood of one gold path. With `grad`, adds observed minus
/// expected feature counts into it.
pub fn sentence_log_likelihood(
    instance: &Instance,
    weights: &[f64],
    index: &FeatureIndex,
    space: &StateSpace,
    grad: Option<&mut [f64]>,
) -> Result<f64> {
    let lattice = build_lattice(&instance.features, weights, index, space)?;
    let len = lattice.len();
    let gold = &instance.gold;
    if gold.len() != len {
        return Err(Error::InvalidConfig("gold path length differs from sentence".into()));
    }
    let mut gold_edges = Vec::with_capacity(len.saturating_sub(1));
    let mut score = lattice.start_score(gold[0]) + lattice.unary(0, gold[0]);
    for t in 1..len {
        let edge = space.edge_between(gold[t - 1], gold[t]).ok_or_else(|| Error::GoldState {
            sentence: 0,
            position: t,
            label: space.name(gold[t]).to_string(),
        })?;
        gold_edges.push(edge);
        score += lattice.edge_score(edge) + lattice.unary(t, gold[t]);
    }
    let fb = forward_backward(&lattice)?;
    let log_likelihood = score - fb.log_z();

    let Some(grad) = grad else {
        return Ok(log_likelihood);
    };

    let obs = index.param_count();
    let labels = index.label_count();
    let block = index.block_size();
    let class = index.outside_class();
    let n = space.len();
    let (obs_grad, trans_grad) = grad.split_at_mut(obs);

    let mut delta = vec![0.0; block];
    for t in 0..len {
        // observed minus expected mass per observation label
        delta.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..n {
            let p = fb.node_marginal(t, s);
            delta[space.label_of(s)] -= p;
        }
        delta[space.label_of(gold[t])] += 1.0;
        if let Some(class) = class {
            delta[labels] = (0..labels).filter(|&l| class[l]).map(|l| delta[l]).sum();
        }
        for &f in instance.features.at(t) {
            let base = f as usize * block;
            for (g, d) in obs_grad[base..base + block].iter_mut().zip(&delta) {
                *g += d;
            }
        }
    }

    for s in 0..n {
        if let Some(p) = space.start_param(s) {
            trans_grad[p] -= fb.node_marginal(0, s);
        }
    }
    if let Some(p) = space.start_param(gold[0]) {
        trans_grad[p] += 1.0;
    }
    let edges = space.edges();
    for t in 1..len {
        for (i, e) in edges.iter().enumerate() {
            let p = (fb.log_alpha(t - 1, e.from)
                + lattice.edge_score(i)
                + lattice.unary(t, e.to)
                + fb.log_beta(t, e.to)
                - fb.log_z())
            .exp();
            trans_grad[e.param] -= p;
        }
        trans_grad[edges[gold_edges[t - 1]].param] += 1.0;
    }
    Ok(log_likelihood)
}

/// Penalized corpus log-likelihood `Σ log p(y|x) − ‖θ‖²/(2σ²)` and its
/// gradient. An infinite `l2_variance` disables the penalty.
pub fn log_likelihood_and_gradient(
    instances: &[Instance],
    weights: &[f64],
    index: &FeatureIndex,
    space: &StateSpace,
    l2_variance: f64,
    exec: &Executor,
) -> Result<(f64, Vec<f64>)> {
    let dim = index.param_count() + space.transition_param_count();
    if weights.len() != dim {
        return Err(Error::WeightLength {
            expected: dim,
            found: weights.len(),
        });
    }
    let partials = exec.map_chunks(instances.len(), |range| -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; dim];
        let mut total = 0.0;
        for i in range {
            total += sentence_log_likelihood(&instances[i], weights, index, space, Some(&mut grad))
                .map_err(|e| match e {
                    Error::GoldState { position, label, .. } => Error::GoldState {
                        sentence: i,
                        position,
                        label,
                    },
                    other => other,
                })?;
        }
        Ok((total, grad))
    });

    let mut objective = 0.0;
    let mut grad = vec![0.0; dim];
    for partial in partials {
        let (value, g) = partial?;
        objective += value;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    if l2_variance.is_finite() {
        let mut norm = 0.0;
        for (g, w) in grad.iter_mut().zip(weights) {
            norm += w * w;
            *g -= w / l2_variance;
        }
        objective -= norm / (2.0 * l2_variance);
    }
    if !objective.is_finite() {
        return Err(Error::NonFinite {
            what: "objective",
            slot: weights.iter().position(|w| !w.is_finite()).unwrap_or(0),
        });
    }
    if let Some(slot) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            slot,
        });
    }
    Ok((objective, grad))
}
