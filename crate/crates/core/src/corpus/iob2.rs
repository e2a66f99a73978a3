use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parsed IOB2 tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

impl<'a> Tag<'a> {
    pub fn parse(label: &'a str) -> Result<Self> {
        if label == "O" {
            return Ok(Tag::Outside);
        }
        let tag = match label.split_once('-') {
            Some(("B", ty)) => Tag::Begin(ty),
            Some(("I", ty)) => Tag::Inside(ty),
            _ => return Err(Error::UnknownLabel(label.to_string())),
        };
        match tag {
            Tag::Begin(ty) | Tag::Inside(ty) if !ty.is_empty() => Ok(tag),
            _ => Err(Error::UnknownLabel(label.to_string())),
        }
    }

    pub fn entity_type(&self) -> Option<&'a str> {
        match *self {
            Tag::Outside => None,
            Tag::Begin(t) | Tag::Inside(t) => Some(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepairMode {
    /// Reject orphan `I-t` tags.
    Strict,
    /// Rewrite orphan `I-t` to `B-t`, as conlleval does.
    Repair,
}

/// Checks (and optionally repairs) an IOB2 sequence.
///
/// With `declared` set, labels whose type is not listed are rejected.
pub fn validate_iob2<S: AsRef<str>>(
    labels: &[S],
    mode: RepairMode,
    declared: Option<&[String]>,
) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(labels.len());
    let mut prev: Option<&str> = None;
    for (position, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        let tag = Tag::parse(label)?;
        if let (Some(declared), Some(ty)) = (declared, tag.entity_type()) {
            if !declared.iter().any(|d| d == ty) {
                return Err(Error::UnknownLabel(label.to_string()));
            }
        }
        match tag {
            Tag::Inside(ty) if prev != Some(ty) => match mode {
                RepairMode::Strict => {
                    return Err(Error::InvalidIob2 {
                        position,
                        message: format!("`{label}` does not continue a `{ty}` chunk"),
                    })
                }
                RepairMode::Repair => out.push(format!("B-{ty}")),
            },
            _ => out.push(label.to_string()),
        }
        prev = tag.entity_type();
    }
    Ok(out)
}

/// A typed entity span, `start` inclusive and `end` exclusive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chunk {
    pub entity_type: String,
    pub start: usize,
    pub end: usize,
}

impl Chunk {
    pub fn new(entity_type: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            entity_type: entity_type.into(),
            start,
            end,
        }
    }
}

/// Extracts maximal `B-t (I-t)*` runs from a strictly valid sequence.
pub fn extract_chunks<S: AsRef<str>>(labels: &[S]) -> Result<Vec<Chunk>> {
    let mut chunks = Vec::new();
    let mut open: Option<Chunk> = None;
    for (position, label) in labels.iter().enumerate() {
        let label = label.as_ref();
        match Tag::parse(label)? {
            Tag::Outside => chunks.extend(open.take()),
            Tag::Begin(ty) => {
                chunks.extend(open.take());
                open = Some(Chunk::new(ty, position, position + 1));
            }
            Tag::Inside(ty) => match open.as_mut() {
                Some(chunk) if chunk.entity_type == ty => chunk.end = position + 1,
                _ => {
                    return Err(Error::InvalidIob2 {
                        position,
                        message: format!("`{label}` does not continue a `{ty}` chunk"),
                    })
                }
            },
        }
    }
    chunks.extend(open);
    Ok(chunks)
}
