//! Arc-factored parsing decoded with Chu-Liu-Edmonds.

mod mst;
mod parser;

pub use mst::{
    brute_force_arborescence, cle, is_arborescence, single_root_cle, tree_score, ScoreMatrix, BRUTE_FORCE_MAX,
};
pub use parser::{graph_decode, score_arcs, score_labels, ArcScorer, ArcTrace, LabelScorer, ROOT_LABEL};
