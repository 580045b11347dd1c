use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("momentum width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("point is in the {found} frame, expected {expected}")]
    FrameMismatch { expected: &'static str, found: &'static str },
    #[error("no conversion from {from} to {to}")]
    UnsupportedUnitPair { from: String, to: String },
    #[error("exact covariant envelope evaluated before its normalization constant was fixed")]
    NotNormalized,
    #[error("tabulated envelope needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("negative amplitude {value} at k = {k}")]
    NegativeAmplitude { k: f64, value: f64 },
    #[error("momentum grid must be strictly increasing and non-negative (sample {index})")]
    NonMonotoneGrid { index: usize },
    #[error("normalization integral is not finite and positive: {0}")]
    DivergentNorm(f64),
    #[error("adaptive quadrature hit {limit} subdivisions (value {value:e}, error {error:e})")]
    MaxSubdivisions { limit: usize, value: f64, error: f64 },
    #[error("integrand returned a non-finite value at {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("method unavailable: {0}")]
    MethodUnavailable(String),
    #[error("grid measurement error {error:e} exceeds 1% of the measured value {value:e}")]
    GridTooCoarse { value: f64, error: f64 },
    #[error("operation requires the packet rest frame (|p| = {0})")]
    NotRestFrame(f64),
    #[error("time integral tail {tail:e} is not below 0.1% of {accumulated:e} by t = {t_max:e}")]
    TailNotConverged { tail: f64, accumulated: f64, t_max: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier, used as the prefix of CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveMass(_) => "NonPositiveMass",
            Error::NonPositiveWidth(_) => "NonPositiveWidth",
            Error::FrameMismatch { .. } => "FrameMismatch",
            Error::UnsupportedUnitPair { .. } => "UnsupportedUnitPair",
            Error::NotNormalized => "NotNormalized",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::NegativeAmplitude { .. } => "NegativeAmplitude",
            Error::NonMonotoneGrid { .. } => "NonMonotoneGrid",
            Error::DivergentNorm(_) => "DivergentNorm",
            Error::MaxSubdivisions { .. } => "MaxSubdivisions",
            Error::NonFiniteIntegrand { .. } => "NonFiniteIntegrand",
            Error::MethodUnavailable(_) => "MethodUnavailable",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::NotRestFrame(_) => "NotRestFrame",
            Error::TailNotConverged { .. } => "TailNotConverged",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }

    /// True for failures of a numerical procedure to converge, as opposed to
    /// rejected input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::MaxSubdivisions { .. }
                | Error::NonFiniteIntegrand { .. }
                | Error::GridTooCoarse { .. }
                | Error::TailNotConverged { .. }
                | Error::DivergentNorm(_)
        )
    }
}
