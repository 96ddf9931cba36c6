//! Agreement indices, success rules for the uncertain scenarios, cluster
//! summaries, two-dimensional metric scaling and the Monte-Carlo replication
//! harness.

mod indices;
mod mds;
mod replicate;
mod scenario;
mod summary;

pub use indices::{adjusted_rand_index, ari_ji, arif_jif, harden, jaccard_index, FuzzyPairCounts, IndexPair};
pub use mds::{classical_mds, mds_2d, mds_permutation_test, stress, Mds};
pub use replicate::{run_replicates, Diagnostics, MSummary, ReplicateConfig, ReplicateReport, RunScore};
pub use scenario::{area_under_fuzziness_curve, label_indices, uncertain_success};
pub use summary::{cluster_summary, paired_t_test, PairedTTest};
