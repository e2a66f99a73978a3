use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::{Label, LabelAlphabet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelOrder {
    /// Bigram transitions over the base IOB2 labels.
    First,
    /// Trigram transitions, realized as a first-order chain over label pairs.
    Second,
    /// Bigram transitions over base labels plus per-type outside carriers.
    PreInduced,
}

impl ModelOrder {
    pub const ALL: [ModelOrder; 3] = [ModelOrder::First, ModelOrder::Second, ModelOrder::PreInduced];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelOrder::First => "first",
            ModelOrder::Second => "second",
            ModelOrder::PreInduced => "pre-induced",
        }
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(ModelOrder::First),
            "second" => Ok(ModelOrder::Second),
            "pre-induced" => Ok(ModelOrder::PreInduced),
            other => Err(Error::InvalidConfig(format!("unknown model order `{other}`"))),
        }
    }
}

/// An allowed transition. `param` is relative to the transition block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub param: usize,
}

/// The effective state set of a model order and its transition structure.
///
/// Every state carries an observation label; observation scores depend only
/// on that label. Transition parameters are numbered densely: one per edge
/// of the unconstrained structure, followed by one per start state.
#[derive(Clone, Debug)]
pub struct StateSpace {
    order: ModelOrder,
    names: Vec<String>,
    state_label: Vec<usize>,
    /// States that count toward the model's effective state set.
    regular_states: usize,
    start_param: Vec<Option<usize>>,
    /// Sorted by `(to, from)`.
    edges: Vec<Edge>,
    incoming: Vec<usize>,
    /// Edge indices sorted by `(from, to)`.
    outgoing_edges: Vec<usize>,
    outgoing: Vec<usize>,
    edge_lookup: Vec<u32>,
    transition_params: usize,
}

const NO_EDGE: u32 = u32::MAX;

impl StateSpace {
    fn assemble(
        order: ModelOrder,
        names: Vec<String>,
        state_label: Vec<usize>,
        regular_states: usize,
        start_param: Vec<Option<usize>>,
        mut edges: Vec<Edge>,
        transition_params: usize,
    ) -> Self {
        let n = names.len();
        edges.sort_by_key(|e| (e.to, e.from));
        let mut incoming = vec![0; n + 1];
        for e in &edges {
            incoming[e.to + 1] += 1;
        }
        for s in 0..n {
            incoming[s + 1] += incoming[s];
        }
        let mut outgoing_edges: Vec<usize> = (0..edges.len()).collect();
        outgoing_edges.sort_by_key(|&i| (edges[i].from, edges[i].to));
        let mut outgoing = vec![0; n + 1];
        for e in &edges {
            outgoing[e.from + 1] += 1;
        }
        for s in 0..n {
            outgoing[s + 1] += outgoing[s];
        }
        let mut edge_lookup = vec![NO_EDGE; n * n];
        for (i, e) in edges.iter().enumerate() {
            edge_lookup[e.from * n + e.to] = i as u32;
        }
        Self {
            order,
            names,
            state_label,
            regular_states,
            start_param,
            edges,
            incoming,
            outgoing_edges,
            outgoing,
            edge_lookup,
            transition_params,
        }
    }

    /// Fully connected space over `n` anonymous states, each its own label.
    pub fn dense(n: usize) -> Self {
        let names = (0..n).map(|i| format!("s{i}")).collect();
        Self::dense_named(ModelOrder::First, names)
    }

    fn dense_named(order: ModelOrder, names: Vec<String>) -> Self {
        let n = names.len();
        let edges: Vec<Edge> = (0..n)
            .flat_map(|from| (0..n).map(move |to| Edge { from, to, param: from * n + to }))
            .collect();
        let start_param = (0..n).map(|s| Some(n * n + s)).collect();
        Self::assemble(order, names, (0..n).collect(), n, start_param, edges, n * n + n)
    }

    pub fn first_order(alphabet: &LabelAlphabet) -> Self {
        Self::dense_named(ModelOrder::First, alphabet.base_labels().to_vec())
    }

    /// Expanded alphabet. With `constrained`, transitions that induction can
    /// never produce (and IOB2-invalid ones) are removed; parameter numbering
    /// is unchanged so constrained and unconstrained spaces share weights.
    pub fn pre_induced(alphabet: &LabelAlphabet, constrained: bool) -> Self {
        let full = Self::dense_named(ModelOrder::PreInduced, alphabet.expanded_labels().to_vec());
        if !constrained {
            return full;
        }
        let edges = full
            .edges
            .iter()
            .copied()
            .filter(|e| induced_transition_allowed(alphabet.label(e.from), alphabet.label(e.to)))
            .collect();
        let start_param = full
            .start_param
            .iter()
            .enumerate()
            .map(|(s, p)| p.filter(|_| induced_start_allowed(alphabet.label(s))))
            .collect();
        Self::assemble(
            ModelOrder::PreInduced,
            full.names,
            full.state_label,
            full.regular_states,
            start_param,
            edges,
            full.transition_params,
        )
    }

    pub fn second_order(alphabet: &LabelAlphabet) -> Self {
        expand_second_order(alphabet.base_labels())
    }

    pub fn for_order(alphabet: &LabelAlphabet, order: ModelOrder, constrained: bool) -> Self {
        match order {
            ModelOrder::First => Self::first_order(alphabet),
            ModelOrder::Second => Self::second_order(alphabet),
            ModelOrder::PreInduced => Self::pre_induced(alphabet, constrained),
        }
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    /// Lattice width, including second-order start pairs.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Effective state count: `2E+1`, `3E+1` or `(2E+1)²` pairs.
    pub fn regular_state_count(&self) -> usize {
        self.regular_states
    }

    pub fn name(&self, state: usize) -> &str {
        &self.names[state]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn label_of(&self, state: usize) -> usize {
        self.state_label[state]
    }

    /// Observation-label path for a state path.
    pub fn project(&self, states: &[usize]) -> Vec<usize> {
        states.iter().map(|&s| self.state_label[s]).collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices into `to`, ordered by `from`.
    #[inline]
    pub fn incoming(&self, to: usize) -> std::ops::Range<usize> {
        self.incoming[to]..self.incoming[to + 1]
    }

    /// Edge indices leaving `from`, ordered by `to`.
    #[inline]
    pub fn outgoing(&self, from: usize) -> &[usize] {
        &self.outgoing_edges[self.outgoing[from]..self.outgoing[from + 1]]
    }

    pub fn edge_between(&self, from: usize, to: usize) -> Option<usize> {
        let e = self.edge_lookup[from * self.len() + to];
        (e != NO_EDGE).then_some(e as usize)
    }

    pub fn start_param(&self, state: usize) -> Option<usize> {
        self.start_param[state]
    }

    pub fn transition_param_count(&self) -> usize {
        self.transition_params
    }
}

fn induced_start_allowed(label: Label) -> bool {
    matches!(label, Label::Begin(_) | Label::Outside)
}

/// Transitions that appear in some induced, IOB2-valid sequence.
pub(crate) fn induced_transition_allowed(prev: Label, next: Label) -> bool {
    match next {
        Label::Begin(_) => true,
        Label::Inside(t) => matches!(prev, Label::Begin(p) | Label::Inside(p) if p == t),
        Label::Outside => prev == Label::Outside,
        Label::Carrier(t) => {
            matches!(prev, Label::Begin(p) | Label::Inside(p) | Label::Carrier(p) if p == t)
        }
    }
}

/// Pair states `(a, b)` over `labels`, plus start pairs `(<start>, b)`.
///
/// Pair `(a, b)` has index `a·N + b` and start pair `(<start>, b)` index
/// `N² + b`; every state projects to its second component. Only
/// consistent transitions `(a, b) → (b, c)` exist, each with its own
/// triple parameter.
pub fn expand_second_order<S: AsRef<str>>(labels: &[S]) -> StateSpace {
    let n = labels.len();
    let mut names = Vec::with_capacity(n * n + n);
    let mut state_label = Vec::with_capacity(n * n + n);
    for a in labels {
        for (bi, b) in labels.iter().enumerate() {
            names.push(format!("({},{})", a.as_ref(), b.as_ref()));
            state_label.push(bi);
        }
    }
    for (bi, b) in labels.iter().enumerate() {
        names.push(format!("(<start>,{})", b.as_ref()));
        state_label.push(bi);
    }
    let mut edges = Vec::with_capacity(n * n * n + n * n);
    let mut param = 0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                edges.push(Edge {
                    from: a * n + b,
                    to: b * n + c,
                    param,
                });
                param += 1;
            }
        }
    }
    for b in 0..n {
        for c in 0..n {
            edges.push(Edge {
                from: n * n + b,
                to: b * n + c,
                param,
            });
            param += 1;
        }
    }
    let mut start_param = vec![None; n * n + n];
    for b in 0..n {
        start_param[n * n + b] = Some(param);
        param += 1;
    }
    StateSpace::assemble(ModelOrder::Second, names, state_label, n * n, start_param, edges, param)
}
