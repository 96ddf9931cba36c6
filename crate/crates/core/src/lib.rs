//! Fuzzy clustering of functional time series by serial-dependence structure.
//!
//! The central dissimilarity compares functional quantile autocorrelations
//! (FQA): for each series, indicators of "the curve lies below a pointwise
//! quantile curve on at most a given fraction of the domain" are correlated
//! across lags. Collections of series are then clustered with fuzzy
//! C-medoids (on the dissimilarity matrix) or fuzzy C-means (on the scaled
//! feature vectors).
//!
//! Modules:
//! - [`fts`]: the series data model, empirical quantile curves and transforms
//! - [`io`]: CSV and manifest handling
//! - [`fqa`]: FQA estimation and the FQA dissimilarity
//! - [`competitors`]: FACF, FSACF and Kendall baselines
//! - [`dissimilarity`]: per-metric features and pairwise matrices
//! - [`clustering`]: fuzzy solvers, Xie-Beni index, hyperparameter selection
//! - [`simulate`]: FAR(2), nonlinear FAR(1), fGARCH(1,1) and benchmark scenarios
//! - [`evaluate`]: ARIF/JIF, ARI/JI, success rules, cluster summaries, MDS

pub mod clustering;
pub mod competitors;
pub mod dissimilarity;
pub mod error;
pub mod evaluate;
pub mod fqa;
pub mod fts;
pub mod io;
pub mod rng;
pub mod simulate;

pub use dissimilarity::{pairwise_matrix, DissimilarityMatrix, Metric, MetricSpec};
pub use error::{Error, Result};
pub use fqa::{d_fqa, feature_vector, FqaFeatureVector, FqaParams, Thresholds};
pub use fts::{FunctionalTimeSeries, Grid, QuantileCurve};
