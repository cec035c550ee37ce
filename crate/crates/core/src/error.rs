use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped so that the CLI can map them onto process exit codes
/// (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("instance generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("solution does not match instance: {0}")]
    KindMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("capacity exceeded: {what} needs {required} evaluations, cap is {cap}")]
    Capacity {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("metric requires a maximization distribution")]
    Orientation,

    #[error("ratio undefined: maximum objective value {0} is not positive")]
    UndefinedRatio(f64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("circuit is not reducible at layer {layer}: {reason}")]
    NotReducible { layer: usize, reason: String },

    #[error("regression failed: {reason} (rmse {rmse:.3e}, theta {theta:?})")]
    Fit {
        reason: String,
        theta: Vec<f64>,
        rmse: f64,
    },

    #[error("witness violation at p={p}, z={z}, r={r}: {detail}")]
    Witness {
        p: usize,
        z: String,
        r: f64,
        detail: String,
    },

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("schema version {found} is not supported (expected {expected}); re-export the file with this version")]
    Schema { found: u32, expected: u32 },

    #[error("{0} already exists; pass --force to overwrite")]
    AlreadyExists(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 validation, 3 capacity, 4 assertion or witness failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } => 3,
            Error::Witness { .. } | Error::BoundViolation(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
