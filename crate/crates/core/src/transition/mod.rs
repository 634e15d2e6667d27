//! Greedy arc-hybrid parsing with SWAP.

mod oracle;
mod parser;
mod system;

pub use oracle::{
    dynamic_costs, labeled_costs, oracle_sequence, projective_order, static_oracle, GoldTree, KindCosts,
};
pub use parser::{greedy_decode, masked_argmax, repaired_analysis, score_transitions, TransitionScorer};
pub use system::{
    apply, feature_slots, initial_config, legal, max_transitions, num_transitions, Configuration, Kind,
    LegalKinds, Slot, Transition, NUM_SLOTS,
};
