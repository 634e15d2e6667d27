//! CoNLL-U treebanks and dependency trees.

mod conllu;
mod tree;

pub use conllu::{
    read_conllu, read_conllu_file, read_conllu_with_id, write_conllu, ExtraColumns,
    PreservedLine, Sentence, Token,
};
pub use tree::{nonprojective_arcs, validate_tree, DepTree};
