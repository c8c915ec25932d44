use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed SigMF metadata at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("sample window [{start}, {start}+{count}) exceeds length {len}")]
    Range {
        start: usize,
        count: usize,
        len: usize,
    },

    #[error("unsupported sample format `{0}`")]
    UnsupportedFormat(String),

    #[error("receiver `{0}` has no configured position")]
    UnknownReceiver(String),

    #[error("insufficient data for {what}: need at least {needed}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("singular design: all distances are equal")]
    SingularDesign,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("decomposition invalid: sigma_x ({sigma_x}) exceeds sigma_z ({sigma_z})")]
    DecompositionInvalid { sigma_z: f64, sigma_x: f64 },

    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("covariance is not positive definite at leading minor {minor}")]
    Factorization { minor: usize },

    #[error("no SNR threshold configured for SF{0}")]
    MissingThreshold(u8),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by too little (or too uniform) data rather than bad input.
    pub fn is_insufficient_data(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData { .. } | Error::SingularDesign | Error::DegenerateSeries
        )
    }
}
