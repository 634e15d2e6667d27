//! Token input representations: word embeddings, character BiLSTM vectors
//! and precomputed contextual vectors combined by a scalar mix.

mod chars;
mod contextual;
mod embeddings;
mod scalar_mix;
mod token;
mod vocab;

pub use chars::{char_embed, CharEmbedder, CharTrace, UNKNOWN_CHAR};
pub use contextual::{fnv1a64, forms_checksum, load_contextual_store, ContextualStore};
pub use embeddings::{lookup_word, EmbeddingTable, PretrainedEmbeddings, UNKNOWN_WORD};
pub use scalar_mix::{scalar_mix, ScalarMix};
pub use token::{token_vector, ContextMixer, LayerRange, TokenEncoder, TokenTrace};
pub use vocab::Vocab;
