use super::states::StateSpace;
use crate::error::{Error, Result};
use crate::features::{FeatureIndex, IndexedFeatures};

/// Log-potentials of one sentence.
///
/// `ψ(0, start, s) = start(s) + unary(0, s)` and
/// `ψ(t, p, s) = transition(p, s) + unary(t, s)` for `t ≥ 1`; pairs without
/// an edge are `-∞`.
#[derive(Clone, Debug)]
pub struct Lattice<'a> {
    space: &'a StateSpace,
    len: usize,
    unary: Vec<f64>,
    edge_scores: Vec<f64>,
    start_scores: Vec<f64>,
}

impl<'a> Lattice<'a> {
    /// `unary` is row-major `len × space.len()`; `transitions` is the
    /// transition parameter block.
    pub fn from_parts(
        space: &'a StateSpace,
        len: usize,
        unary: Vec<f64>,
        transitions: &[f64],
    ) -> Result<Self> {
        if unary.len() != len * space.len() {
            return Err(Error::InvalidConfig(format!(
                "unary table has {} entries, expected {}",
                unary.len(),
                len * space.len()
            )));
        }
        if transitions.len() != space.transition_param_count() {
            return Err(Error::WeightLength {
                expected: space.transition_param_count(),
                found: transitions.len(),
            });
        }
        let edge_scores = space.edges().iter().map(|e| transitions[e.param]).collect();
        let start_scores = (0..space.len())
            .map(|s| space.start_param(s).map_or(f64::NEG_INFINITY, |p| transitions[p]))
            .collect();
        Ok(Self {
            space,
            len,
            unary,
            edge_scores,
            start_scores,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn states(&self) -> usize {
        self.space.len()
    }

    pub fn space(&self) -> &StateSpace {
        self.space
    }

    #[inline]
    pub fn unary(&self, t: usize, s: usize) -> f64 {
        self.unary[t * self.space.len() + s]
    }

    pub fn unary_row_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.space.len();
        &mut self.unary[t * n..(t + 1) * n]
    }

    #[inline]
    pub fn edge_score(&self, edge: usize) -> f64 {
        self.edge_scores[edge]
    }

    #[inline]
    pub fn start_score(&self, s: usize) -> f64 {
        self.start_scores[s]
    }

    /// `ψ(t, prev, s)`; `prev` is `None` only at `t = 0`.
    pub fn potential(&self, t: usize, prev: Option<usize>, s: usize) -> f64 {
        match prev {
            None => self.start_scores[s] + self.unary(t, s),
            Some(p) => self
                .space
                .edge_between(p, s)
                .map_or(f64::NEG_INFINITY, |e| self.edge_scores[e] + self.unary(t, s)),
        }
    }
}

/// Scores every state at every position from the active features.
pub fn build_lattice<'a>(
    features: &IndexedFeatures,
    weights: &[f64],
    index: &FeatureIndex,
    space: &'a StateSpace,
) -> Result<Lattice<'a>> {
    let obs = index.param_count();
    let expected = obs + space.transition_param_count();
    if weights.len() != expected {
        return Err(Error::WeightLength {
            expected,
            found: weights.len(),
        });
    }
    let labels = index.label_count();
    let block = index.block_size();
    let tied = index.outside_class();
    let n = space.len();
    let len = features.len();

    let mut unary = vec![0.0; len * n];
    let mut label_scores = vec![0.0; labels];
    for t in 0..len {
        label_scores.iter_mut().for_each(|v| *v = 0.0);
        for &f in features.at(t) {
            let base = f as usize * block;
            let row = &weights[base..base + block];
            for (score, w) in label_scores.iter_mut().zip(row) {
                *score += w;
            }
            if let Some(class) = tied {
                let coarse = row[labels];
                for (score, &outside) in label_scores.iter_mut().zip(class) {
                    if outside {
                        *score += coarse;
                    }
                }
            }
        }
        let row = &mut unary[t * n..(t + 1) * n];
        for (s, v) in row.iter_mut().enumerate() {
            *v = label_scores[space.label_of(s)];
        }
    }
    Lattice::from_parts(space, len, unary, &weights[obs..])
}

/// Max-shifted log-sum-exp; `-∞` when every term is `-∞`.
#[inline]
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Log-domain forward and backward tables.
#[derive(Clone, Debug)]
pub struct ForwardBackward {
    len: usize,
    states: usize,
    log_alpha: Vec<f64>,
    log_beta: Vec<f64>,
    log_z: f64,
    log_z_backward: f64,
}

impl ForwardBackward {
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// The partition value recovered from the backward table.
    pub fn log_z_backward(&self) -> f64 {
        self.log_z_backward
    }

    #[inline]
    pub fn log_alpha(&self, t: usize, s: usize) -> f64 {
        self.log_alpha[t * self.states + s]
    }

    #[inline]
    pub fn log_beta(&self, t: usize, s: usize) -> f64 {
        self.log_beta[t * self.states + s]
    }

    #[inline]
    pub fn node_marginal(&self, t: usize, s: usize) -> f64 {
        (self.log_alpha(t, s) + self.log_beta(t, s) - self.log_z).exp()
    }

    pub fn node_marginals(&self, t: usize) -> Vec<f64> {
        (0..self.states).map(|s| self.node_marginal(t, s)).collect()
    }

    /// `P(y_{t-1} = from, y_t = to)` for every edge, `t ≥ 1`, indexed like
    /// `StateSpace::edges`.
    pub fn edge_marginals(&self, lattice: &Lattice<'_>, t: usize) -> Vec<f64> {
        assert!(t >= 1 && t < self.len);
        lattice
            .space()
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                (self.log_alpha(t - 1, e.from)
                    + lattice.edge_score(i)
                    + lattice.unary(t, e.to)
                    + self.log_beta(t, e.to)
                    - self.log_z)
                    .exp()
            })
            .collect()
    }
}

pub fn forward_backward(lattice: &Lattice<'_>) -> Result<ForwardBackward> {
    let len = lattice.len();
    let n = lattice.states();
    if len == 0 {
        return Err(Error::InvalidConfig("empty lattice".into()));
    }
    let space = lattice.space();
    let mut log_alpha = vec![f64::NEG_INFINITY; len * n];
    let mut scratch = Vec::with_capacity(n);

    for (s, slot) in log_alpha[..n].iter_mut().enumerate() {
        *slot = lattice.start_score(s) + lattice.unary(0, s);
    }
    check_column(&log_alpha[..n], 0)?;
    for t in 1..len {
        let (done, rest) = log_alpha.split_at_mut(t * n);
        let prev = &done[(t - 1) * n..];
        let cur = &mut rest[..n];
        for (s, slot) in cur.iter_mut().enumerate() {
            scratch.clear();
            for e in space.incoming(s) {
                scratch.push(prev[space.edges()[e].from] + lattice.edge_score(e));
            }
            *slot = log_sum_exp(&scratch) + lattice.unary(t, s);
        }
        check_column(cur, t)?;
    }

    let mut log_beta = vec![f64::NEG_INFINITY; len * n];
    log_beta[(len - 1) * n..].iter_mut().for_each(|v| *v = 0.0);
    let mut next_term = vec![0.0; n];
    for t in (0..len - 1).rev() {
        for (s, v) in next_term.iter_mut().enumerate() {
            *v = lattice.unary(t + 1, s) + log_beta[(t + 1) * n + s];
        }
        for s in 0..n {
            scratch.clear();
            for &e in space.outgoing(s) {
                scratch.push(lattice.edge_score(e) + next_term[space.edges()[e].to]);
            }
            log_beta[t * n + s] = log_sum_exp(&scratch);
        }
    }

    let log_z = log_sum_exp(&log_alpha[(len - 1) * n..]);
    scratch.clear();
    scratch.extend(
        log_beta[..n]
            .iter()
            .enumerate()
            .map(|(s, b)| lattice.start_score(s) + lattice.unary(0, s) + b),
    );
    let log_z_backward = log_sum_exp(&scratch);
    Ok(ForwardBackward {
        len,
        states: n,
        log_alpha,
        log_beta,
        log_z,
        log_z_backward,
    })
}

fn check_column(column: &[f64], position: usize) -> Result<()> {
    if column.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Contradictory { position });
    }
    Ok(())
}

/// Highest-scoring state path and its log-score. Ties go to the lower
/// state index, both for the final state and at every backpointer.
pub fn viterbi(lattice: &Lattice<'_>) -> Result<(Vec<usize>, f64)> {
    let len = lattice.len();
    let n = lattice.states();
    if len == 0 {
        return Err(Error::InvalidConfig("empty lattice".into()));
    }
    let space = lattice.space();
    let mut delta = vec![f64::NEG_INFINITY; n];
    let mut next = vec![f64::NEG_INFINITY; n];
    let mut back = vec![usize::MAX; len * n];
    for (s, d) in delta.iter_mut().enumerate() {
        *d = lattice.start_score(s) + lattice.unary(0, s);
    }
    for t in 1..len {
        for (s, slot) in next.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut arg = usize::MAX;
            for e in space.incoming(s) {
                let from = space.edges()[e].from;
                let v = delta[from] + lattice.edge_score(e);
                if v > best {
                    best = v;
                    arg = from;
                }
            }
            *slot = best + lattice.unary(t, s);
            back[t * n + s] = arg;
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut best = f64::NEG_INFINITY;
    let mut last = usize::MAX;
    for (s, &v) in delta.iter().enumerate() {
        if v > best {
            best = v;
            last = s;
        }
    }
    if last == usize::MAX || !best.is_finite() {
        return Err(Error::NoFinitePath);
    }
    let mut path = vec![0; len];
    path[len - 1] = last;
    for t in (1..len).rev() {
        path[t - 1] = back[t * n + path[t]];
    }
    Ok((path, best))
}
