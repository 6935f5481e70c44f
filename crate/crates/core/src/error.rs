use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside the supported range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A desk-scale guard was exceeded (explicit enumeration too large).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An element or index does not belong to the group it was used with.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("index {index} out of range for group of order {order}")]
    Range { index: u128, order: u128 },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    /// The space budget cannot host even the smallest table layout.
    #[error("infeasible plan: {0}")]
    Infeasible(String),

    #[error("build failed: {0}")]
    Build(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Contract(_)
            | Error::Range { .. }
            | Error::Unsupported(_)
            | Error::Infeasible(_)
            | Error::Malformed(_)
            | Error::Io(_) => 2,
            Error::Capacity(_) => 3,
            Error::Build(_) | Error::Internal(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
