//! Observation feature templates and the feature-to-parameter index.
//!
//! Feature strings are a stable contract and appear verbatim in model
//! files: `W[d]=<token>`, `NW[d]=<normalized token>`, `PRE[L]=`, `SUF[L]=`
//! and `BIAS`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Token};
use crate::crf::ModelOrder;
use crate::error::{Error, Result};
use crate::induction::LabelAlphabet;

/// Boundary sentinels. The leading control character keeps them from
/// colliding with any real token.
pub const BOS: &str = "\u{1}<BOS>";
pub const EOS: &str = "\u{1}<EOS>";
pub const BIAS: &str = "BIAS";

/// Lowercases and folds every decimal digit to `0`.
pub fn normalize_token(token: &str) -> String {
    token
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii_digit() { '0' } else { c })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Window tokens (and their normalized forms).
    One,
    /// Set one plus character prefixes and suffixes.
    Two,
}

impl FeatureSet {
    pub fn id(self) -> u8 {
        match self {
            FeatureSet::One => 1,
            FeatureSet::Two => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(FeatureSet::One),
            2 => Ok(FeatureSet::Two),
            other => Err(Error::InvalidConfig(format!("unknown feature set {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateConfig {
    pub set: FeatureSet,
    pub window_offsets: Vec<i32>,
    pub use_normalized: bool,
    pub affix_lengths: Vec<usize>,
    pub min_feature_count: usize,
}

impl TemplateConfig {
    pub fn new(set: FeatureSet) -> Self {
        Self {
            set,
            window_offsets: vec![-1, 0, 1],
            use_normalized: true,
            affix_lengths: vec![2, 3, 4],
            min_feature_count: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.affix_lengths.contains(&0) {
            return Err(Error::InvalidConfig("affix lengths must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest absolute window offset.
    pub fn window_radius(&self) -> usize {
        self.window_offsets
            .iter()
            .map(|d| d.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self::new(FeatureSet::One)
    }
}

/// Active feature strings at one position.
pub type PositionFeatures = Vec<String>;

pub fn extract_features(sentence: &Sentence, config: &TemplateConfig) -> Vec<PositionFeatures> {
    extract_token_features(&sentence.tokens, config)
}

pub fn extract_token_features(tokens: &[Token], config: &TemplateConfig) -> Vec<PositionFeatures> {
    let normalized: Vec<String> = if config.use_normalized {
        tokens.iter().map(Token::normalized).collect()
    } else {
        Vec::new()
    };
    let at = |t: usize, d: i32, normalized_form: bool| -> &str {
        let i = t as i64 + d as i64;
        if i < 0 {
            BOS
        } else if i as usize >= tokens.len() {
            EOS
        } else if normalized_form {
            &normalized[i as usize]
        } else {
            tokens[i as usize].as_str()
        }
    };

    (0..tokens.len())
        .map(|t| {
            let mut feats = Vec::new();
            for &d in &config.window_offsets {
                feats.push(format!("W[{d}]={}", at(t, d, false)));
            }
            if config.use_normalized {
                for &d in &config.window_offsets {
                    feats.push(format!("NW[{d}]={}", at(t, d, true)));
                }
            }
            if config.set == FeatureSet::Two {
                let chars: Vec<char> = tokens[t].as_str().chars().collect();
                for &len in &config.affix_lengths {
                    if chars.len() >= len {
                        let prefix: String = chars[..len].iter().collect();
                        let suffix: String = chars[chars.len() - len..].iter().collect();
                        feats.push(format!("PRE[{len}]={prefix}"));
                        feats.push(format!("SUF[{len}]={suffix}"));
                    }
                }
            }
            feats.push(BIAS.to_string());
            feats
        })
        .collect()
}

/// Feature ids per position, flattened.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexedFeatures {
    offsets: Vec<usize>,
    ids: Vec<u32>,
}

impl IndexedFeatures {
    pub fn from_positions(positions: &[Vec<u32>]) -> Self {
        let mut offsets = Vec::with_capacity(positions.len() + 1);
        let mut ids = Vec::new();
        offsets.push(0);
        for p in positions {
            ids.extend_from_slice(p);
            offsets.push(ids.len());
        }
        Self { offsets, ids }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, t: usize) -> &[u32] {
        &self.ids[self.offsets[t]..self.offsets[t + 1]]
    }
}

/// Maps feature strings to contiguous blocks of observation slots.
///
/// Each feature owns `labels` fine slots, one per observation label, and,
/// when tying is on, one trailing coarse slot shared by every label in the
/// outside class.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureIndex {
    features: Vec<String>,
    lookup: HashMap<String, u32>,
    labels: usize,
    outside_class: Option<Vec<bool>>,
}

impl FeatureIndex {
    /// `outside_class` enables coarse tying; its length must equal `labels`.
    pub fn from_features(
        features: Vec<String>,
        labels: usize,
        outside_class: Option<Vec<bool>>,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyFeatureSet);
        }
        if let Some(class) = &outside_class {
            if class.len() != labels {
                return Err(Error::InvalidConfig("outside-class mask has wrong length".into()));
            }
        }
        let mut lookup = HashMap::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if lookup.insert(f.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate feature {f:?}")));
            }
        }
        Ok(Self {
            features,
            lookup,
            labels,
            outside_class,
        })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn get(&self, feature: &str) -> Option<u32> {
        self.lookup.get(feature).copied()
    }

    /// Observation labels per block.
    pub fn label_count(&self) -> usize {
        self.labels
    }

    pub fn is_tied(&self) -> bool {
        self.outside_class.is_some()
    }

    pub fn outside_class(&self) -> Option<&[bool]> {
        self.outside_class.as_deref()
    }

    pub fn block_size(&self) -> usize {
        self.labels + usize::from(self.is_tied())
    }

    /// Total observation parameters.
    pub fn param_count(&self) -> usize {
        self.features.len() * self.block_size()
    }

    #[inline]
    pub fn fine_slot(&self, feature: u32, label: usize) -> usize {
        feature as usize * self.block_size() + label
    }

    #[inline]
    pub fn coarse_slot(&self, feature: u32) -> Option<usize> {
        self.is_tied()
            .then(|| feature as usize * self.block_size() + self.labels)
    }

    /// Slots whose weights sum to the score of `feature` under `label`.
    pub fn observation_slots(&self, feature: u32, label: usize) -> Result<Vec<usize>> {
        if label >= self.labels {
            return Err(Error::UnknownLabel(format!("state #{label}")));
        }
        if feature as usize >= self.features.len() {
            return Err(Error::InvalidConfig(format!("feature #{feature} not indexed")));
        }
        let mut slots = vec![self.fine_slot(feature, label)];
        if let (Some(class), Some(coarse)) = (&self.outside_class, self.coarse_slot(feature)) {
            if class[label] {
                slots.push(coarse);
            }
        }
        Ok(slots)
    }

    /// Indexes extracted features, dropping unknown ones.
    pub fn index_positions(&self, positions: &[PositionFeatures]) -> IndexedFeatures {
        let ids: Vec<Vec<u32>> = positions
            .iter()
            .map(|p| p.iter().filter_map(|f| self.get(f)).collect())
            .collect();
        IndexedFeatures::from_positions(&ids)
    }
}

/// Observation label count and outside-class mask for a model order.
pub fn observation_layout(alphabet: &LabelAlphabet, order: ModelOrder) -> (usize, Option<Vec<bool>>) {
    match order {
        ModelOrder::First | ModelOrder::Second => (alphabet.base_len(), None),
        ModelOrder::PreInduced => {
            let mask = (0..alphabet.expanded_len())
                .map(|i| alphabet.label(i).is_outside_class())
                .collect();
            (alphabet.expanded_len(), Some(mask))
        }
    }
}

/// Collects every feature occurring at least `min_feature_count` times,
/// in first-occurrence order.
pub fn build_feature_index(
    corpus: &[Sentence],
    config: &TemplateConfig,
    alphabet: &LabelAlphabet,
    order: ModelOrder,
) -> Result<FeatureIndex> {
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("cannot index an empty corpus".into()));
    }
    config.validate()?;
    let mut order_seen: Vec<String> = Vec::new();
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for sentence in corpus {
        for position in extract_features(sentence, config) {
            for feature in position {
                let next = order_seen.len();
                let entry = counts.entry(feature).or_insert_with_key(|k| {
                    order_seen.push(k.clone());
                    (next, 0)
                });
                entry.1 += 1;
            }
        }
    }
    let cutoff = config.min_feature_count.max(1);
    let features: Vec<String> = order_seen
        .into_iter()
        .filter(|f| counts[f].1 >= cutoff)
        .collect();
    let (labels, outside) = observation_layout(alphabet, order);
    FeatureIndex::from_features(features, labels, outside)
}
