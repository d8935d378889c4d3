//! Feature robustness, similarity clustering and the nonparametric tests used
//! to relate features to model errors.

pub mod cluster;
pub mod hypothesis;
pub mod robustness;
pub mod similarity;

pub use cluster::{hierarchical_cluster, k_medoids, ClusterResult, HierarchicalResult};
pub use hypothesis::{friedman_test, holm_correction, ks_two_sample, pairwise_wins, wilcoxon_signed_rank};
pub use robustness::{estimate_n_nanout, nan_rate, robustness, LowerPercentile, RobustnessReport};
pub use similarity::{similarity_matrix, sw_correlation};
