use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("mesh too coarse: {0}")]
    TooCoarse(String),

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("gap {k} is degenerate")]
    DegenerateGap { k: usize },

    #[error("gap {k} out of range: only {available} gaps below the energy cutoff")]
    GapOutOfRange { k: usize, available: usize },

    #[error("factorization breakdown at shift {shift} after {retries} retries")]
    Breakdown { shift: f64, retries: usize },

    #[error("contract `{invariant}` violated: {detail}")]
    Contract { invariant: String, detail: String },

    #[error("no alignment witness: {0}")]
    NoWitness(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
}

impl Error {
    pub fn contract(invariant: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Contract {
            invariant: invariant.into(),
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract { .. } | Error::Breakdown { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
