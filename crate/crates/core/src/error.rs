use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid is not connected: bus {unreached} cannot be reached from bus {root}")]
    DisconnectedGrid { root: usize, unreached: usize },

    #[error("reduced Laplacian is numerically singular (condition estimate {condition:.3e} exceeds {cap:.3e})")]
    Singular { condition: f64, cap: f64 },

    #[error("injections are unbalanced: net injection {net:.3e} MW")]
    Unbalanced { net: f64 },

    #[error("offer at bus {bus} has decreasing block prices ({previous} then {next} $/MWh)")]
    NonConvexOffer {
        bus: usize,
        previous: f64,
        next: f64,
    },

    #[error("invalid offer: {0}")]
    InvalidOffer(String),

    #[error("linear program is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("linear program is unbounded along variable {variable}")]
    Unbounded { variable: usize },

    #[error("simplex iteration limit of {0} reached")]
    IterationLimit(usize),

    #[error("no intervals retained in the price horizon")]
    EmptyHorizon,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("estimate has nonpositive maximum diagonal entry {0}")]
    DegenerateEstimate(f64),

    #[error("ADMM stopped after {iters} iterations without meeting tolerances (last primal residual {primal:.3e}, tolerance {tol:.3e})")]
    MaxItersExceeded { iters: usize, primal: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl std::fmt::Display, found: impl std::fmt::Display) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// True for failures caused by the numbers rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::IterationLimit(_)
                | Error::MaxItersExceeded { .. }
                | Error::DegenerateEstimate(_)
        )
    }
}
