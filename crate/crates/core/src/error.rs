use crate::hermite::HermiteSeries;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Newton iteration for a quadrature node failed to converge.
    #[error("quadrature node {index} of a {order}-point rule did not converge within {max_iter} iterations")]
    QuadratureConvergence {
        order: usize,
        index: usize,
        max_iter: usize,
    },

    /// The activation being expanded returned a non-finite value.
    #[error("activation produced non-finite value {value} at quadrature node {node}")]
    NonFiniteActivation { node: f64, value: f64 },

    /// Too few observations for the requested k-statistic order.
    #[error("need more than {order} observations for order-{order} k-statistics, got {len}")]
    InsufficientSample { len: usize, order: usize },

    /// A covariance matrix has an eigenvalue below the accepted tolerance.
    #[error("covariance is not positive semidefinite: eigenvalue {eigenvalue:.6e} below tolerance {tolerance:.1e}")]
    NotPositiveSemidefinite { eigenvalue: f64, tolerance: f64 },

    /// Eigenvalue clipping during a covariance square root removed too much mass.
    #[error("covariance square root clipped eigenvalue mass {clipped:.3e} against trace {trace:.3e}, beyond the 1e-6 relative guard")]
    ExcessiveClipping { clipped: f64, trace: f64 },

    /// The coefficient solver exhausted its restart budget.
    #[error("no coefficient vector reached the target cumulants after {restarts} restarts; best residual {best_residual:.6e}")]
    SolverDidNotConverge {
        restarts: usize,
        best_residual: f64,
        /// Closest candidate found, for diagnostics.
        best_series: HermiteSeries,
    },

    /// Online SGD produced a non-finite loss or parameter.
    #[error("training diverged at step {step}: non-finite loss or parameter (learning rate too high for this data scale?)")]
    TrainingDiverged { step: u64 },

    /// Name passed to the experiment preset table is not known.
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
