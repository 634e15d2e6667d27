//! Evaluation and contrastive error analysis.

mod metrics;
mod profile;
mod stats;

pub use metrics::{
    aligned_trees, attachment_scores, binned_f, by_dep_length, by_root_distance, corpus_attachment_scores,
    dep_length, group_metrics, las_by_sentence_length, nonproj_pr, root_distance, sentence_bin, AlignedPair,
    AttachmentScores, BinScore, DistanceBin, GroupMetrics, LengthBin, Ratio, SentenceBin,
};
pub use profile::{compute_profile, profile_csv, ErrorProfile, ALL_TREEBANKS, CSV_HEADER};
pub use stats::{error_reduction, sample_balanced, wilcoxon_signed_rank, Wilcoxon, EXACT_LIMIT};
