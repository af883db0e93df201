use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A channel (or effective channel) that must be nonzero vanished.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("distance {distance} m is below the 1 m reference distance of the path-loss model")]
    OutOfModel { distance: f64 },

    /// The SDP solver hit its iteration cap before certifying optimality.
    /// The best iterate is kept so callers can still inspect it.
    #[error(
        "SDP solver did not converge after {iterations} sweeps \
         (objective {objective}, duality gap {gap}, diag residual {diag_residual})"
    )]
    ConvergenceFailure {
        iterations: usize,
        objective: f64,
        gap: f64,
        diag_residual: f64,
    },

    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),

    #[error("config error for key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}
