use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants map onto the CLI exit-code contract: configuration, contract,
/// resource and I/O problems are caller errors; numeric failures are not.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model, data, training or noise configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A call violated a documented precondition (shape or length mismatch).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A requested computation exceeds a configured resource cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Affine scaling is undefined because the data range is empty.
    #[error("degenerate scaling: {0}")]
    DegenerateScaling(String),

    /// A metric is undefined for the supplied data (e.g. zero variance).
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    /// A least-squares design matrix does not have full column rank.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Non-finite values appeared during optimization.
    #[error("numeric failure at iteration {iteration}: {message}")]
    Numeric { iteration: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for failures caused by the numbers rather than the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
