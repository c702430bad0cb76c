use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error on line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("f(r1) = 0 at r1 = {r1}; no pairs below the lower radius")]
    InsufficientMass { r1: f64 },

    #[error("degenerate radius range: r1 = {r1}, r2 = {r2}")]
    DegenerateRange { r1: f64, r2: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "no root for margin search: target {target} outside [{low_value}, {high_value}] over s in (0, 0.5]"
    )]
    NoRoot {
        target: f64,
        low_value: f64,
        high_value: f64,
    },

    #[error("column-count search saturated at h_max = {h_max}: model cd {value} < target {target}")]
    Saturated { h_max: usize, value: f64, target: f64 },

    #[error("correlation undefined: fewer than two non-constant columns")]
    UndefinedCorrelation,
}

impl Error {
    /// Usage and input-format problems, as opposed to failures of the computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Format { .. } | Error::Io(_) | Error::InvalidArgument(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
