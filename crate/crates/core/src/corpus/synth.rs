use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Sentence, Token};
use crate::error::{Error, Result};

/// Distribution of the number of filler tokens between the two entities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GapDistribution {
    /// Uniform over `min..=max`.
    Uniform { min: usize, max: usize },
    /// Explicit `(gap, weight)` pairs.
    Weighted(Vec<(usize, f64)>),
}

impl Default for GapDistribution {
    fn default() -> Self {
        GapDistribution::Uniform { min: 1, max: 6 }
    }
}

impl GapDistribution {
    fn validate(&self) -> Result<()> {
        match self {
            GapDistribution::Uniform { min, max } if *min >= 1 && min <= max => Ok(()),
            GapDistribution::Weighted(w)
                if !w.is_empty()
                    && w.iter().all(|&(g, p)| g >= 1 && p.is_finite() && p >= 0.0)
                    && w.iter().any(|&(_, p)| p > 0.0) =>
            {
                Ok(())
            }
            other => Err(Error::InvalidConfig(format!(
                "gap distribution {other:?} is not over positive integers"
            ))),
        }
    }

    /// Smallest gap with non-zero probability.
    pub fn min_gap(&self) -> usize {
        match self {
            GapDistribution::Uniform { min, .. } => *min,
            GapDistribution::Weighted(w) => w
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(g, _)| *g)
                .min()
                .unwrap_or(1),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            GapDistribution::Uniform { min, max } => (*min + *max) as f64 / 2.0,
            GapDistribution::Weighted(w) => {
                let total: f64 = w.iter().map(|(_, p)| p).sum();
                w.iter().map(|(g, p)| *g as f64 * p).sum::<f64>() / total
            }
        }
    }
}

/// Parameters of the synthetic long-distance corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub entity_type_count: usize,
    pub gap: GapDistribution,
    pub sentences: usize,
    /// `dependency_rule[first] = second`; must be a permutation.
    pub dependency_rule: Vec<usize>,
    pub seed: u64,
    pub filler_vocab: usize,
    pub first_entity_vocab: usize,
    pub shared_entity_vocab: usize,
    pub max_trailing_fillers: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::new(2)
    }
}

impl SynthConfig {
    /// Identity dependency rule over `entity_type_count` types.
    pub fn new(entity_type_count: usize) -> Self {
        Self {
            entity_type_count,
            gap: GapDistribution::default(),
            sentences: 2000,
            dependency_rule: (0..entity_type_count).collect(),
            seed: 7,
            filler_vocab: 20,
            first_entity_vocab: 5,
            shared_entity_vocab: 10,
            max_trailing_fillers: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entity_type_count < 2 {
            return Err(Error::InvalidConfig(
                "at least two entity types are needed for a dependency".into(),
            ));
        }
        if self.sentences == 0
            || self.filler_vocab == 0
            || self.first_entity_vocab == 0
            || self.shared_entity_vocab == 0
        {
            return Err(Error::InvalidConfig(
                "sentence count and vocabulary sizes must be positive".into(),
            ));
        }
        let mut seen = vec![false; self.entity_type_count];
        if self.dependency_rule.len() != self.entity_type_count {
            return Err(Error::InvalidConfig(
                "dependency rule must cover every entity type".into(),
            ));
        }
        for &target in &self.dependency_rule {
            if target >= self.entity_type_count || std::mem::replace(&mut seen[target], true) {
                return Err(Error::InvalidConfig(
                    "dependency rule is not a bijection".into(),
                ));
            }
        }
        self.gap.validate()
    }

    pub fn type_names(&self) -> Vec<String> {
        (0..self.entity_type_count).map(type_name).collect()
    }
}

pub(crate) fn type_name(index: usize) -> String {
    if index < 26 {
        char::from(b'A' + index as u8).to_string()
    } else {
        format!("T{index}")
    }
}

pub(crate) fn first_entity_word(ty: &str, k: usize) -> String {
    format!("P{ty}_{k}")
}

pub(crate) fn shared_entity_word(k: usize) -> String {
    format!("S_{k}")
}

pub(crate) fn filler_word(k: usize) -> String {
    format!("f_{k}")
}

/// Generates `[first entity][gap fillers][second entity][trailing fillers]`
/// sentences. The first entity's surface form reveals its type; the second
/// entity is drawn from a type-neutral vocabulary, so its type is only
/// recoverable through the precursor.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Vec<Sentence>> {
    config.validate()?;
    let names = config.type_names();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weighted = match &config.gap {
        GapDistribution::Weighted(w) => Some(
            WeightedIndex::new(w.iter().map(|(_, p)| *p))
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        ),
        GapDistribution::Uniform { .. } => None,
    };

    let mut corpus = Vec::with_capacity(config.sentences);
    for _ in 0..config.sentences {
        let first = rng.gen_range(0..config.entity_type_count);
        let second = config.dependency_rule[first];
        let gap = match (&config.gap, &weighted) {
            (GapDistribution::Uniform { min, max }, _) => rng.gen_range(*min..=*max),
            (GapDistribution::Weighted(w), Some(index)) => w[index.sample(&mut rng)].0,
            _ => unreachable!(),
        };
        let trailing = rng.gen_range(0..=config.max_trailing_fillers);

        let mut words = Vec::with_capacity(gap + trailing + 2);
        let mut labels = Vec::with_capacity(gap + trailing + 2);
        words.push(first_entity_word(
            &names[first],
            rng.gen_range(0..config.first_entity_vocab),
        ));
        labels.push(format!("B-{}", names[first]));
        for _ in 0..gap {
            words.push(filler_word(rng.gen_range(0..config.filler_vocab)));
            labels.push("O".to_string());
        }
        words.push(shared_entity_word(rng.gen_range(0..config.shared_entity_vocab)));
        labels.push(format!("B-{}", names[second]));
        for _ in 0..trailing {
            words.push(filler_word(rng.gen_range(0..config.filler_vocab)));
            labels.push("O".to_string());
        }
        let tokens = words.into_iter().map(Token).collect();
        corpus.push(Sentence {
            tokens,
            labels: Some(labels),
        });
    }
    Ok(corpus)
}

/// Best achievable second-entity type accuracy for a predictor that cannot
/// see the first entity: the mode of the second-type distribution.
pub fn bayes_chance_level(config: &SynthConfig) -> Result<f64> {
    config.validate()?;
    let n = config.entity_type_count;
    let mut second = vec![0.0; n];
    for first in 0..n {
        second[config.dependency_rule[first]] += 1.0 / n as f64;
    }
    Ok(second.into_iter().fold(0.0, f64::max))
}
