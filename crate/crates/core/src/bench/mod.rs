//! Experiment harnesses built on the measures: the sensitivity ablation over
//! synthetic instances, dataset ranking, a k-means clustering oracle, and the
//! rank-stability simulation.

mod ablation;
mod kmeans;
mod ranking;
mod stability;

pub use ablation::{ablation, AblationConfig, AblationResult, Factor, VariantMatrix, MAX_EXCLUDED_FRACTION};
pub use kmeans::{approx_ground_truth_clm, default_k_grid, kmeans, kmeans_with_history, KMeansFit};
pub use ranking::{rank_datasets, Measure, MeasureOutcome, RankEntry, Ranking, RankingFailure};
pub use stability::{rank_stability, StabilityResult, DEFAULT_SUBSET_SIZE, DEFAULT_TRIALS};
