//! CoNLL-style column corpora, IOB2 handling and synthetic long-distance data.

mod iob2;
mod synth;

use std::fmt;
use std::io::{BufRead, Write};

pub use iob2::{extract_chunks, validate_iob2, Chunk, RepairMode, Tag};
pub use synth::{bayes_chance_level, generate_synthetic, GapDistribution, SynthConfig};

use crate::error::{Error, Result};

/// A single whitespace-free token.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::InvalidConfig("empty token".into()));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!(
                "token {text:?} contains whitespace"
            )));
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn normalized(&self) -> String {
        crate::features::normalize_token(&self.0)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One training or decoding instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub labels: Option<Vec<String>>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(labels) = &labels {
            if labels.len() != tokens.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} labels for {} tokens",
                    labels.len(),
                    tokens.len()
                )));
            }
        }
        Ok(Self { tokens, labels })
    }

    /// Builds a sentence from string slices, panicking on invalid tokens.
    /// Intended for fixtures.
    pub fn from_strs(tokens: &[&str], labels: Option<&[&str]>) -> Self {
        let tokens = tokens.iter().map(|t| Token::new(*t).unwrap()).collect();
        let labels = labels.map(|l| l.iter().map(|s| s.to_string()).collect());
        Self::new(tokens, labels).unwrap()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_strs(&self) -> Vec<&str> {
        self.tokens.iter().map(Token::as_str).collect()
    }
}

/// Which column carries the gold label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    None,
    Last,
    Index(usize),
}

fn split_columns(line: &str) -> Vec<&str> {
    line.split([' ', '\t']).filter(|c| !c.is_empty()).collect()
}

/// Reads blank-line separated sentences, one token per line.
pub fn read_conll<R: BufRead>(
    reader: R,
    token_column: usize,
    label_column: LabelColumn,
) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();

    let mut flush = |tokens: &mut Vec<Token>, labels: &mut Vec<String>| {
        if tokens.is_empty() {
            return;
        }
        let labels = match label_column {
            LabelColumn::None => None,
            _ => Some(std::mem::take(labels)),
        };
        sentences.push(Sentence {
            tokens: std::mem::take(tokens),
            labels,
        });
    };

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut labels);
            continue;
        }
        let columns = split_columns(line);
        let needed = match label_column {
            LabelColumn::None | LabelColumn::Last => token_column + 1,
            LabelColumn::Index(l) => token_column.max(l) + 1,
        };
        let needed = if label_column == LabelColumn::Last {
            needed.max(2)
        } else {
            needed
        };
        if columns.len() < needed {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least {needed} columns, found {}", columns.len()),
            });
        }
        tokens.push(Token(columns[token_column].to_string()));
        match label_column {
            LabelColumn::None => {}
            LabelColumn::Last => labels.push(columns[columns.len() - 1].to_string()),
            LabelColumn::Index(l) => labels.push(columns[l].to_string()),
        }
    }
    flush(&mut tokens, &mut labels);
    Ok(sentences)
}

/// Reads a corpus, taking labels from the last column when every data line
/// has at least two columns and reading tokens only otherwise.
pub fn read_conll_auto(text: &str) -> Result<Vec<Sentence>> {
    let labelled = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .all(|l| split_columns(l).len() >= 2);
    let has_data = text.lines().any(|l| !l.trim().is_empty());
    let column = if labelled && has_data {
        LabelColumn::Last
    } else {
        LabelColumn::None
    };
    read_conll(text.as_bytes(), 0, column)
}

/// Writes sentences tab-separated: token, gold label (if any), prediction (if any).
pub fn write_conll<W: Write>(
    mut writer: W,
    sentences: &[Sentence],
    predicted: Option<&[Vec<String>]>,
) -> Result<()> {
    if let Some(predicted) = predicted {
        if predicted.len() != sentences.len() {
            return Err(Error::Alignment {
                sentence: predicted.len().min(sentences.len()),
                message: format!(
                    "{} predicted sequences for {} sentences",
                    predicted.len(),
                    sentences.len()
                ),
            });
        }
    }
    for (i, sentence) in sentences.iter().enumerate() {
        let pred = predicted.map(|p| &p[i]);
        if let Some(pred) = pred {
            if pred.len() != sentence.len() {
                return Err(Error::Alignment {
                    sentence: i,
                    message: format!(
                        "{} predicted labels for {} tokens",
                        pred.len(),
                        sentence.len()
                    ),
                });
            }
        }
        for (t, token) in sentence.tokens.iter().enumerate() {
            write!(writer, "{token}")?;
            if let Some(labels) = &sentence.labels {
                write!(writer, "\t{}", labels[t])?;
            }
            if let Some(pred) = pred {
                write!(writer, "\t{}", pred[t])?;
            }
            writeln!(writer)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn conll_to_string(sentences: &[Sentence], predicted: Option<&[Vec<String>]>) -> Result<String> {
    let mut buf = Vec::new();
    write_conll(&mut buf, sentences, predicted)?;
    Ok(String::from_utf8(buf).expect("tokens and labels are UTF-8"))
}
