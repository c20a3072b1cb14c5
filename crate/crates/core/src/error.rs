use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance schema violation: {0}")]
    Schema(String),

    #[error("target {id}: {reason}")]
    InvalidTarget { id: i64, reason: String },

    #[error("target {id}: pair (A, H) is not observable")]
    Unobservable { id: i64 },

    #[error("edge ({i}, {j}): {reason}")]
    InvalidEdge { i: i64, j: i64, reason: String },

    #[error("network is disconnected: no path from target {from} to target {to}")]
    Disconnected { from: i64, to: i64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("riccati integration step underflow at t = {t:e} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("riccati solution is not stabilizing (residual {residual:e})")]
    NonStabilizing { residual: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("schedule never observes the target")]
    NoObservation,

    #[error("k-means produced an empty cluster for k = {k}")]
    EmptyCluster { k: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Schema(_) => "schema",
            Error::InvalidTarget { .. } => "invalid_target",
            Error::Unobservable { .. } => "unobservable",
            Error::InvalidEdge { .. } => "invalid_edge",
            Error::Disconnected { .. } => "disconnected",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::NonStabilizing { .. } => "non_stabilizing",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NoObservation => "no_observation",
            Error::EmptyCluster { .. } => "empty_cluster",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Whether the failure came from the numerics rather than from the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::NonStabilizing { .. }
                | Error::NoConvergence { .. }
                | Error::NoObservation
                | Error::EmptyCluster { .. }
        )
    }
}
