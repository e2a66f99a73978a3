//! Linear-chain CRF machinery shared by all three model orders.

mod lattice;
mod objective;
mod states;

pub use lattice::{build_lattice, forward_backward, viterbi, ForwardBackward, Lattice};
pub use objective::{
    gold_states, log_likelihood_and_gradient, prepare_instances, sentence_log_likelihood,
    Instance,
};
pub use states::{expand_second_order, Edge, ModelOrder, StateSpace};
