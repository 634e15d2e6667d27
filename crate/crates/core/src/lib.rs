//! Dependency parsing with two decoders over one encoder design: a greedy
//! arc-hybrid parser with a Swap transition, and an arc-factored parser
//! decoded with Chu-Liu-Edmonds. Both read BiLSTM token vectors built from
//! word embeddings, character BiLSTMs and, optionally, precomputed
//! contextual vectors mixed across layers. The [`analysis`] module
//! contrasts their errors.

pub mod analysis;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod model;
pub mod neural;
pub mod repr;
pub mod synthetic;
pub mod transition;
pub mod train;
pub mod treebank;

pub use error::{Error, Result, TreeError};

/// Deterministic RNG used for initialisation, dropout, shuffling and sampling.
pub type Rng64 = rand_chacha::ChaCha8Rng;
