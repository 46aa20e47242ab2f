use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("continuous bath with gamma > 0 needs at least one mode")]
    ZeroModes,

    #[error("time grid must start at 0 and increase strictly")]
    InvalidGrid,

    #[error("grid interval [{start}, {end}] straddles a coupling discontinuity at t = {at}")]
    SegmentMismatch { start: f64, end: f64, at: f64 },

    #[error("time {0} is not a point of the propagation grid")]
    NotOnGrid(f64),

    #[error("inference matrix does not exist at t = {time} (condition number {condition:e})")]
    NotInvertible { time: f64, condition: f64 },

    #[error("trapezoidal double integral not converged: step halving changed the result by {change:e} (relative)")]
    GridTooCoarse { change: f64 },

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("convolution leaks {leak:e} probability past the grid edges")]
    GridTooSmall { leak: f64 },

    #[error("joint distribution requires a Gaussian system state")]
    NonGaussianState,

    #[error("weighting parameter {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("density not normalized: integral = {0}")]
    NotNormalized(f64),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
