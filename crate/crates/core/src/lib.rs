//! Cluster-label matching (CLM) evaluation for labeled datasets.
//!
//! The crate scores how well the class labels of a dataset coincide with the
//! clusters formed by its points. It provides:
//!
//! - [`dataset`]: datasets, partitions, the distance layer used by axiom tests,
//!   subsampling and centroid statistics.
//! - [`within`]: classical internal validity indices (Calinski-Harabasz,
//!   Silhouette, Davies-Bouldin, Dunn, Xie-Beni, I-index).
//! - [`between`]: the between-dataset Calinski-Harabasz index and its ablation
//!   variants.
//! - [`evm`]: external measures (ARI, AMI, NMI, V-measure) and the rank/error
//!   statistics used by the experiment harnesses.
//! - [`synth`]: the two-Gaussian synthetic dataset generator.
//! - [`bench`]: experiment harnesses (sensitivity ablation, dataset ranking,
//!   k-means oracle, rank stability).

pub mod bench;
pub mod between;
pub mod dataset;
pub mod error;
pub mod evm;
pub mod rng;
pub mod synth;
pub mod within;

pub use between::{
    ch_btwn, score_variant, Aggregation, BetweenConfig, BetweenScore, PairScope, PairScore,
    VariantId,
};
pub use dataset::{CentroidStats, Dataset, DistanceView, Partition};
pub use error::{ClmError, Result};
pub use within::{Direction, IvmScore};
