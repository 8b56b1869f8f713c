use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bias voltage is zero; the drive frequency vanishes")]
    ZeroBias,
    #[error("integration diverged at tau = {tau}")]
    Diverged { tau: f64 },
    #[error("trajectory too short: {0}")]
    TooShort(String),
    #[error("no spectral peak above threshold")]
    NoPeriod,
    #[error("odd number of velocity sign changes ({0}) in one period")]
    InconsistentCrossings(usize),
    #[error("orbit does not close within tolerance (mismatch {0:.3e})")]
    NotPeriodic(f64),
    #[error("grid shape {width}x{height} is not 2^k + 1 per axis")]
    Shape { width: usize, height: usize },
    #[error("empty border mask; dimension undefined")]
    EmptyMask,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
