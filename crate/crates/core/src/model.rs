//! Trained models: decoding and the text file format.
//!
//! The file is a line-oriented, self-describing document. Every section
//! header carries an explicit count, the transition layout is spelled out
//! by state name, and weights are printed with 17 significant digits so a
//! save/load cycle reproduces them exactly.

use std::io::{BufRead, Write};

use crate::corpus::Sentence;
use crate::crf::{build_lattice, viterbi, ModelOrder, StateSpace};
use crate::error::{Error, Result};
use crate::features::{
    extract_features, observation_layout, FeatureIndex, FeatureSet, TemplateConfig,
};
use crate::induction::{Label, LabelAlphabet};
use crate::parallel::Executor;

pub const FORMAT_MAGIC: &str = "picrf-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Model {
    order: ModelOrder,
    alphabet: LabelAlphabet,
    template: TemplateConfig,
    index: FeatureIndex,
    weights: Vec<f64>,
    decode_constraints: bool,
    space: StateSpace,
    decode_space: StateSpace,
}

impl Model {
    pub fn new(
        order: ModelOrder,
        alphabet: LabelAlphabet,
        template: TemplateConfig,
        index: FeatureIndex,
        weights: Vec<f64>,
        decode_constraints: bool,
    ) -> Result<Self> {
        let space = StateSpace::for_order(&alphabet, order, false);
        let (labels, outside) = observation_layout(&alphabet, order);
        if index.label_count() != labels || index.outside_class() != outside.as_deref() {
            return Err(Error::InvalidConfig(
                "feature index layout does not match the model order".into(),
            ));
        }
        let expected = index.param_count() + space.transition_param_count();
        if weights.len() != expected {
            return Err(Error::WeightLength {
                expected,
                found: weights.len(),
            });
        }
        let decode_space = StateSpace::for_order(&alphabet, order, decode_constraints);
        Ok(Self {
            order,
            alphabet,
            template,
            index,
            weights,
            decode_constraints,
            space,
            decode_space,
        })
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn alphabet(&self) -> &LabelAlphabet {
        &self.alphabet
    }

    pub fn template(&self) -> &TemplateConfig {
        &self.template
    }

    pub fn index(&self) -> &FeatureIndex {
        &self.index
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    /// Effective state count of the model order.
    pub fn state_count(&self) -> usize {
        self.space.regular_state_count()
    }

    pub fn decode_constraints(&self) -> bool {
        self.decode_constraints
    }

    pub fn set_decode_constraints(&mut self, on: bool) {
        self.decode_constraints = on;
        self.decode_space = StateSpace::for_order(&self.alphabet, self.order, on);
    }

    /// Viterbi state path over the model's lattice states.
    pub fn decode_states(&self, sentence: &Sentence) -> Result<Vec<usize>> {
        if sentence.is_empty() {
            return Ok(Vec::new());
        }
        let positions = extract_features(sentence, &self.template);
        let features = self.index.index_positions(&positions);
        let lattice = build_lattice(&features, &self.weights, &self.index, &self.decode_space)?;
        Ok(viterbi(&lattice)?.0)
    }

    /// Decoded labels before reversion (carriers kept for pre-induced models).
    pub fn decode_labels(&self, sentence: &Sentence) -> Result<Vec<Label>> {
        let states = self.decode_states(sentence)?;
        Ok(self
            .decode_space
            .project(&states)
            .into_iter()
            .map(|l| self.alphabet.label(l))
            .collect())
    }

    /// Base IOB2 labels; carriers are reverted to `O`.
    pub fn tag(&self, sentence: &Sentence) -> Result<Vec<String>> {
        Ok(self
            .decode_labels(sentence)?
            .into_iter()
            .map(|l| self.alphabet.name(l.revert()).to_string())
            .collect())
    }

    pub fn tag_corpus(&self, corpus: &[Sentence], exec: &Executor) -> Result<Vec<Vec<String>>> {
        exec.map(corpus, |s| self.tag(s)).into_iter().collect()
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FORMAT_MAGIC} {FORMAT_VERSION}")?;
        writeln!(w, "order {}", self.order)?;
        writeln!(w, "decode-constraints {}", self.decode_constraints)?;
        let types = self.alphabet.entity_types();
        writeln!(w, "entity-types {}", types.len())?;
        for t in types {
            writeln!(w, "{t}")?;
        }
        let labels = self.alphabet.expanded_labels();
        writeln!(w, "labels {}", labels.len())?;
        for l in labels {
            writeln!(w, "{l}")?;
        }
        writeln!(w, "states {} effective {}", self.space.len(), self.state_count())?;
        for s in self.space.names() {
            writeln!(w, "{s}")?;
        }

        let t = &self.template;
        writeln!(w, "template")?;
        writeln!(w, "set {}", t.set.id())?;
        writeln!(w, "window {}", join(&t.window_offsets))?;
        writeln!(w, "normalized {}", t.use_normalized)?;
        writeln!(w, "affixes {}", join(&t.affix_lengths))?;
        writeln!(w, "min-count {}", t.min_feature_count)?;

        writeln!(
            w,
            "features {} block {}",
            self.index.feature_count(),
            self.index.block_size()
        )?;
        for f in self.index.features() {
            writeln!(w, "{f}")?;
        }

        let layout = transition_layout(&self.space);
        writeln!(w, "transitions {}", layout.len())?;
        for line in &layout {
            writeln!(w, "{line}")?;
        }

        writeln!(w, "weights {}", self.weights.len())?;
        for x in &self.weights {
            writeln!(w, "{x:.16e}")?;
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = Lines {
            inner: reader.lines(),
            line: 0,
        };
        let header = lines.next_line()?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FORMAT_MAGIC) {
            return Err(lines.error("not a model file"));
        }
        let version = parts.next().unwrap_or("");
        if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: version.to_string(),
                expected: FORMAT_VERSION,
            });
        }

        let order: ModelOrder = lines.keyed("order")?.parse()?;
        let decode_constraints = lines.keyed_parse::<bool>("decode-constraints")?;
        let type_count = lines.keyed_parse::<usize>("entity-types")?;
        let types = lines.take(type_count)?;
        let alphabet = LabelAlphabet::new(&types)?;

        let label_count = lines.keyed_parse::<usize>("labels")?;
        let labels = lines.take(label_count)?;
        if labels != alphabet.expanded_labels() {
            return Err(lines.error("label listing does not match the entity types"));
        }
        let space = StateSpace::for_order(&alphabet, order, false);
        let states_line = lines.keyed("states")?;
        let state_count = states_line
            .split_whitespace()
            .next()
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| lines.error("bad state count"))?;
        let states = lines.take(state_count)?;
        if states != space.names() {
            return Err(lines.error("state listing does not match the model order"));
        }

        if lines.next_line()? != "template" {
            return Err(lines.error("expected `template`"));
        }
        let set = FeatureSet::from_id(lines.keyed_parse::<u8>("set")?)?;
        let window_offsets = parse_list::<i32>(&lines.keyed("window")?)
            .ok_or_else(|| lines.error("bad window offsets"))?;
        let use_normalized = lines.keyed_parse::<bool>("normalized")?;
        let affix_lengths = parse_list::<usize>(&lines.keyed("affixes")?)
            .ok_or_else(|| lines.error("bad affix lengths"))?;
        let min_feature_count = lines.keyed_parse::<usize>("min-count")?;
        let template = TemplateConfig {
            set,
            window_offsets,
            use_normalized,
            affix_lengths,
            min_feature_count,
        };
        template.validate()?;

        let feature_line = lines.keyed("features")?;
        let feature_count = feature_line
            .split_whitespace()
            .next()
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| lines.error("bad feature count"))?;
        let features = lines.take(feature_count)?;
        let (obs_labels, outside) = observation_layout(&alphabet, order);
        let index = FeatureIndex::from_features(features, obs_labels, outside)?;
        if feature_line != format!("{feature_count} block {}", index.block_size()) {
            return Err(lines.error("feature block size does not match the model order"));
        }

        let transition_count = lines.keyed_parse::<usize>("transitions")?;
        let layout = lines.take(transition_count)?;
        if layout != transition_layout(&space) {
            return Err(lines.error("transition layout does not match the model order"));
        }

        let weight_count = lines.keyed_parse::<usize>("weights")?;
        let mut weights = Vec::with_capacity(weight_count);
        for _ in 0..weight_count {
            let line = lines.next_line()?;
            let w = line
                .trim()
                .parse::<f64>()
                .map_err(|_| lines.error("bad weight"))?;
            weights.push(w);
        }
        if lines.next_line()? != "end" {
            return Err(lines.error("expected `end`"));
        }
        Model::new(order, alphabet, template, index, weights, decode_constraints)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("model text is UTF-8")
    }
}

/// One line per transition parameter, in parameter order.
fn transition_layout(space: &StateSpace) -> Vec<String> {
    let mut lines = vec![String::new(); space.transition_param_count()];
    for e in space.edges() {
        lines[e.param] = format!("edge\t{}\t{}", space.name(e.from), space.name(e.to));
    }
    for s in 0..space.len() {
        if let Some(p) = space.start_param(s) {
            lines[p] = format!("start\t{}", space.name(s));
        }
    }
    lines
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Option<Vec<T>> {
    text.split_whitespace().map(|v| v.parse().ok()).collect()
}

struct Lines<B> {
    inner: std::io::Lines<B>,
    line: usize,
}

impl<B: BufRead> Lines<B> {
    fn error(&self, message: &str) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.to_string(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(line) => Ok(line?.trim_end_matches('\r').to_string()),
            None => Err(self.error("unexpected end of file")),
        }
    }

    /// Reads `key rest` and returns `rest`.
    fn keyed(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.to_string()),
            _ if line == key => Ok(String::new()),
            _ => Err(self.error(&format!("expected `{key}`"))),
        }
    }

    fn keyed_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let value = self.keyed(key)?;
        value
            .trim()
            .parse()
            .map_err(|_| self.error(&format!("bad value for `{key}`")))
    }

    fn take(&mut self, count: usize) -> Result<Vec<String>> {
        (0..count).map(|_| self.next_line()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::build_feature_index;

    fn toy_model(order: ModelOrder) -> Model {
        let corpus = vec![
            Sentence::from_strs(&["x", "y", "z"], Some(&["B-A", "O", "B-B"])),
            Sentence::from_strs(&["y", "x"], Some(&["O", "B-A"])),
        ];
        let alphabet = LabelAlphabet::from_corpus(&corpus).unwrap();
        let template = TemplateConfig::new(FeatureSet::Two);
        let index = build_feature_index(&corpus, &template, &alphabet, order).unwrap();
        let space = StateSpace::for_order(&alphabet, order, false);
        let dim = index.param_count() + space.transition_param_count();
        let weights = (0..dim).map(|i| ((i * 7919) % 101) as f64 / 37.0 - 1.3).collect();
        Model::new(order, alphabet, template, index, weights, false).unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        for order in ModelOrder::ALL {
            let model = toy_model(order);
            let text = model.to_text();
            let loaded = Model::load(text.as_bytes()).unwrap();
            assert_eq!(loaded.weights(), model.weights());
            assert_eq!(loaded.to_text(), text);
            let s = Sentence::from_strs(&["z", "y", "x", "q"], None);
            assert_eq!(loaded.tag(&s).unwrap(), model.tag(&s).unwrap());
        }
    }

    #[test]
    fn version_checked_first() {
        let text = toy_model(ModelOrder::First).to_text();
        let bumped = text.replacen("picrf-model 1", "picrf-model 2", 1);
        assert!(matches!(
            Model::load(bumped.as_bytes()),
            Err(Error::VersionMismatch { .. })
        ));
        assert!(matches!(
            Model::load("picrf-model 9\ngarbage".as_bytes()),
            Err(Error::VersionMismatch { .. })
        ));
        assert!(matches!(
            Model::load("hello".as_bytes()),
            Err(Error::ModelFormat { line: 1, .. })
        ));
    }

    #[test]
    fn truncated_file_rejected() {
        let text = toy_model(ModelOrder::PreInduced).to_text();
        let cut = &text[..text.len() / 2];
        assert!(Model::load(cut.as_bytes()).is_err());
    }

    #[test]
    fn pre_induced_tags_are_reverted() {
        let model = toy_model(ModelOrder::PreInduced);
        assert_eq!(model.state_count(), 7);
        let s = Sentence::from_strs(&["x", "y", "y", "y", "z"], None);
        for label in model.tag(&s).unwrap() {
            assert!(!label.ends_with("[O]"));
        }
    }

    #[test]
    fn empty_sentence_tags_to_nothing() {
        let model = toy_model(ModelOrder::Second);
        assert!(model.tag(&Sentence::default()).unwrap().is_empty());
        assert_eq!(model.state_count(), 25);
    }
}
