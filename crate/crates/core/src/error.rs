use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The inverse differential of the exponential map is singular at |Z| = 2π.
    #[error("dexpinv is singular at |Z| = {norm} (must stay below 2π)")]
    Singularity { norm: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// Euler-angle chart hit sin(θ) ≈ 0.
    #[error("gimbal lock at t = {t}: theta = {theta}")]
    GimbalLock { t: f64, theta: f64 },

    #[error("circle fit failed: {0}")]
    Fit(String),

    /// The orthogonality function does not change sign on the bracket.
    #[error("no sign change on [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
