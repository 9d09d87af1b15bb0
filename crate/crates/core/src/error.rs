use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("level |F={f}, mF={m_f}> is outside the ground hyperfine manifold")]
    LevelOutsideManifold { f: i32, m_f: i32 },

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("spectrum contains a monochromatic line; use the closed-form rate")]
    MonochromaticComponent,

    #[error("gamma_2->1 vanishes, rate ratios are undefined")]
    ZeroReferenceRate,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput { field, reason: reason.into() }
    }

    /// Whether the failure stems from user input rather than from numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput { .. }
                | Error::LevelOutsideManifold { .. }
                | Error::MonochromaticComponent
                | Error::Config { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
