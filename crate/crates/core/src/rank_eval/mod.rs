//! Pairwise ranking and agreement statistics.

pub mod ranker;
pub mod stats;

pub use ranker::{
    fit_pairwise_ranker, rank_pair_by_trajectory, ranking_accuracy, read_judgments, split_judgments,
    write_judgments, Choice, InitSource, PairJudgment, PairwiseRanker, RankerOptions, Stratum,
};
pub use stats::{krippendorff_alpha, mcc, mcc_significance, wilcoxon_rank_sum};
