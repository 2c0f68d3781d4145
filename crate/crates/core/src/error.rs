use thiserror::Error;

/// Errors produced by the steerable graph Laplacian pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),

    #[error("dimension error: requested {requested}, current {current}")]
    Dimension { requested: usize, current: usize },

    #[error("aliasing: {n_angles} angular samples cannot resolve |m| <= {max_freq} (need at least {required})")]
    Aliasing {
        n_angles: usize,
        max_freq: usize,
        required: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(
        "point {index} is isolated (degree {degree:e}); epsilon is too small for the data spread"
    )]
    IsolatedPoint { index: usize, degree: f64 },

    #[error("eigen-solver failed to converge for angular index m = {m}")]
    EigenSolver { m: i32 },

    #[error("affinity is already density-normalized")]
    AlreadyNormalized,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Broad category used by front-ends to pick exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Layout(_)
            | Error::Dimension { .. }
            | Error::Aliasing { .. }
            | Error::Config(_)
            | Error::Shape(_)
            | Error::AlreadyNormalized
            | Error::Empty(_) => ErrorKind::Config,
            Error::Format(_) | Error::Io(_) | Error::Csv(_) => ErrorKind::Data,
            Error::IsolatedPoint { .. } | Error::EigenSolver { .. } => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}
