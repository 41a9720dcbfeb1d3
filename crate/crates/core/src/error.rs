use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported ensemble: {0}")]
    UnsupportedEnsemble(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("system too small: L = {len}, need at least {min}")]
    TooSmall { len: usize, min: usize },

    #[error("bond ({left}, {right}) is not a valid nearest-neighbour bond for L = {len}")]
    BondOutOfRange { left: usize, right: usize, len: usize },

    #[error("matrix flavor {found} does not match state basis {expected}")]
    FlavorMismatch { expected: &'static str, found: &'static str },

    #[error("cumulative truncation error {error:e} exceeds ceiling {ceiling:e} at t = {step}")]
    TruncationCeiling { step: usize, error: f64, ceiling: f64 },

    #[error("signal lost at t = {step}: state vanished")]
    SignalLost { step: usize },

    #[error("fit window {window} has {points} points (need {needed}); run to T >= {required_t}")]
    FitInsufficient { window: &'static str, points: usize, needed: usize, required_t: usize },

    #[error("fit window {window} has {points} points (need {needed}); the signal reaches the noise floor at t = {floor_t}, more random states or samples lower it")]
    FitBelowNoise { window: &'static str, points: usize, needed: usize, floor_t: usize },

    #[error("normalization vanished at t = {step}")]
    DegenerateNormalization { step: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical integrity: {0}")]
    NumericalIntegrity(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
