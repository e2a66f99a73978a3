//! Linear-chain CRF sequence labeling with precursor-induced outside states.
//!
//! Three model orders share one lattice engine:
//!
//! * [`ModelOrder::First`]: bigram transitions over IOB2 labels.
//! * [`ModelOrder::Second`]: trigram transitions via label-pair states.
//! * [`ModelOrder::PreInduced`]: the outside label is split into one carrier
//!   `t[O]` per entity type, so the type of the last entity seen survives a
//!   run of outside tokens while the chain stays first order. Observation
//!   weights of all outside-class states are tied through a shared coarse
//!   slot, and carriers are reverted to `O` on output.

pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod features;
pub mod induction;
pub mod model;
pub mod parallel;
pub mod training;

pub use corpus::{Sentence, Token};
pub use crf::ModelOrder;
pub use error::{Error, Result};
pub use features::{FeatureSet, TemplateConfig};
pub use induction::LabelAlphabet;
pub use model::Model;
pub use parallel::Executor;
pub use training::{train, TrainConfig, TrainReport};
