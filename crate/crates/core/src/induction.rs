//! Expanded label alphabet and the precursor induction transform.
//!
//! Induction rewrites every `O` that follows an entity of type `t` (within
//! the same sentence) into the carrier state `t[O]`, so that a first-order
//! chain can pass the identity of the last entity across a run of outside
//! tokens. Reversion maps carriers back to `O`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::corpus::{Sentence, Tag};
use crate::error::{Error, Result};

/// A label over the expanded alphabet, with entity types as indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Begin(usize),
    Inside(usize),
    Outside,
    /// `t[O]`: outside, preceded in the sentence by an entity of type `t`.
    Carrier(usize),
}

impl Label {
    pub fn entity_type(self) -> Option<usize> {
        match self {
            Label::Begin(t) | Label::Inside(t) => Some(t),
            Label::Outside | Label::Carrier(_) => None,
        }
    }

    /// True for `O` and every carrier.
    pub fn is_outside_class(self) -> bool {
        matches!(self, Label::Outside | Label::Carrier(_))
    }

    pub fn revert(self) -> Label {
        match self {
            Label::Carrier(_) => Label::Outside,
            other => other,
        }
    }
}

/// Base IOB2 labels plus one carrier state per entity type.
///
/// Index layout: `B-t` at `2i`, `I-t` at `2i + 1`, `O` at `2E`, and the
/// carrier `t[O]` at `2E + 1 + i`. Base labels therefore form a prefix of
/// the expanded alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAlphabet {
    entity_types: Vec<String>,
    names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl LabelAlphabet {
    pub fn new<S: AsRef<str>>(entity_types: &[S]) -> Result<Self> {
        if entity_types.is_empty() {
            return Err(Error::InvalidConfig("at least one entity type is required".into()));
        }
        let mut types = Vec::with_capacity(entity_types.len());
        for ty in entity_types {
            let ty = ty.as_ref();
            if ty.is_empty() || ty.chars().any(|c| c.is_whitespace() || c == '[' || c == ']') {
                return Err(Error::InvalidConfig(format!(
                    "entity type {ty:?} is empty or contains reserved characters"
                )));
            }
            if types.iter().any(|t: &String| t == ty) {
                return Err(Error::DuplicateType(ty.to_string()));
            }
            types.push(ty.to_string());
        }

        let mut names = Vec::with_capacity(3 * types.len() + 1);
        for ty in &types {
            names.push(format!("B-{ty}"));
            names.push(format!("I-{ty}"));
        }
        names.push("O".to_string());
        for ty in &types {
            names.push(format!("{ty}[O]"));
        }
        let lookup = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Ok(Self {
            entity_types: types,
            names,
            lookup,
        })
    }

    /// Collects the entity types used in a labelled corpus, sorted.
    pub fn from_corpus(corpus: &[Sentence]) -> Result<Self> {
        let mut types = BTreeSet::new();
        for sentence in corpus {
            for label in sentence.labels.iter().flatten() {
                if let Some(ty) = Tag::parse(label)?.entity_type() {
                    types.insert(ty.to_string());
                }
            }
        }
        let types: Vec<_> = types.into_iter().collect();
        Self::new(&types)
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    pub fn type_count(&self) -> usize {
        self.entity_types.len()
    }

    pub fn base_len(&self) -> usize {
        2 * self.entity_types.len() + 1
    }

    pub fn expanded_len(&self) -> usize {
        self.names.len()
    }

    pub fn base_labels(&self) -> &[String] {
        &self.names[..self.base_len()]
    }

    pub fn induced_labels(&self) -> &[String] {
        &self.names[self.base_len()..]
    }

    pub fn expanded_labels(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, label: Label) -> usize {
        let e = self.entity_types.len();
        match label {
            Label::Begin(t) => 2 * t,
            Label::Inside(t) => 2 * t + 1,
            Label::Outside => 2 * e,
            Label::Carrier(t) => 2 * e + 1 + t,
        }
    }

    pub fn label(&self, index: usize) -> Label {
        let e = self.entity_types.len();
        assert!(index < self.names.len(), "label index {index} out of range");
        match index {
            i if i < 2 * e && i % 2 == 0 => Label::Begin(i / 2),
            i if i < 2 * e => Label::Inside(i / 2),
            i if i == 2 * e => Label::Outside,
            i => Label::Carrier(i - 2 * e - 1),
        }
    }

    pub fn name(&self, label: Label) -> &str {
        &self.names[self.index(label)]
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn parse(&self, name: &str) -> Result<Label> {
        self.lookup(name)
            .map(|i| self.label(i))
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    /// The set `{O} ∪ induced`, as expanded indices.
    pub fn coarse_outside_class(&self) -> Vec<usize> {
        (self.base_len() - 1..self.expanded_len()).collect()
    }
}

impl fmt::Display for LabelAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names.join(" "))
    }
}

fn check_strict(labels: &[Label]) -> Result<()> {
    let mut prev = None;
    for (position, &label) in labels.iter().enumerate() {
        match label {
            Label::Carrier(_) => {
                return Err(Error::InvalidIob2 {
                    position,
                    message: "induced label in a base sequence".into(),
                })
            }
            Label::Inside(t) if prev != Some(t) => {
                return Err(Error::InvalidIob2 {
                    position,
                    message: "inside tag does not continue a chunk of its type".into(),
                })
            }
            _ => {}
        }
        prev = label.entity_type();
    }
    Ok(())
}

/// Rewrites `O` to `t[O]` wherever the closest preceding entity has type `t`.
pub fn induce(labels: &[Label]) -> Result<Vec<Label>> {
    check_strict(labels)?;
    let mut memory = None;
    Ok(labels
        .iter()
        .map(|&label| match label {
            Label::Outside => memory.map_or(Label::Outside, Label::Carrier),
            other => {
                memory = other.entity_type();
                other
            }
        })
        .collect())
}

/// Maps every carrier back to `O`.
pub fn revert(labels: &[Label]) -> Vec<Label> {
    labels.iter().map(|l| l.revert()).collect()
}

/// String-level [`induce`].
pub fn induce_strs<S: AsRef<str>>(labels: &[S], alphabet: &LabelAlphabet) -> Result<Vec<String>> {
    let parsed = parse_all(labels, alphabet)?;
    Ok(induce(&parsed)?
        .into_iter()
        .map(|l| alphabet.name(l).to_string())
        .collect())
}

/// String-level [`revert`].
pub fn revert_strs<S: AsRef<str>>(labels: &[S], alphabet: &LabelAlphabet) -> Result<Vec<String>> {
    let parsed = parse_all(labels, alphabet)?;
    Ok(revert(&parsed)
        .into_iter()
        .map(|l| alphabet.name(l).to_string())
        .collect())
}

fn parse_all<S: AsRef<str>>(labels: &[S], alphabet: &LabelAlphabet) -> Result<Vec<Label>> {
    labels.iter().map(|l| alphabet.parse(l.as_ref())).collect()
}

/// Number of carrier states added for a type set of the given size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NewStateCount {
    /// One carrier per entity type; what this crate builds.
    pub carriers: usize,
    /// `(N - 1) / 2 + 1` with `N = 2E + 1` base IOB2 labels, i.e. `E + 1`.
    /// Reported alongside for comparison; not used anywhere.
    pub iob2_formula: usize,
}

pub fn count_new_states(entity_type_count: usize) -> NewStateCount {
    let n = 2 * entity_type_count + 1;
    NewStateCount {
        carriers: entity_type_count,
        iob2_formula: (n - 1) / 2 + 1,
    }
}
