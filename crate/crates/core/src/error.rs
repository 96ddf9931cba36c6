use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid value {value} at row {row}, column {col}: {reason}")]
    InvalidEntry {
        row: usize,
        col: usize,
        value: f64,
        reason: &'static str,
    },

    /// A marginal indicator probability was 0 or 1, so the autocorrelation
    /// has a zero denominator.
    #[error(
        "degenerate marginal at tau={tau}, tau2={tau2}, lag={lag}, beta={beta}, beta2={beta2} \
         (marginals {p1}, {p2})"
    )]
    DegenerateMarginal {
        tau: f64,
        tau2: f64,
        lag: usize,
        beta: f64,
        beta2: f64,
        p1: f64,
        p2: f64,
    },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("no convergence after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("process left its stable region at t={t}: |G| = {magnitude}")]
    Stability { t: usize, magnitude: f64 },

    #[error("coincident centroids: minimum squared separation is {0}")]
    DegenerateSeparation(f64),

    #[error("cluster {0} has zero total membership")]
    DegenerateCluster(usize),

    #[error("index undefined: {0}")]
    IndexUndefined(String),

    #[error("selection failed: {0}")]
    Selection(String),

    #[error("series {index}: {source}")]
    Series {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at row {row}{}: {msg}", .col.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        col: Option<usize>,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_series(self, index: usize) -> Self {
        Error::Series {
            index,
            source: Box::new(self),
        }
    }

    /// Strips any `Series` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Series { source, .. } => source.root(),
            e => e,
        }
    }
}
