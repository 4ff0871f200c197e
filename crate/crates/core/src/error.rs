use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("efficiency {value} of channel {channel} is outside [0, 1]")]
    EfficiencyOutOfRange { channel: usize, value: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("unraveling matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("feasibility problem is empty")]
    EmptyProblem,

    #[error("bracket ({lo}, {hi}) does not straddle the threshold: S(lo) = {s_lo:.5}, S(hi) = {s_hi:.5}")]
    BracketDoesNotStraddle {
        lo: f64,
        hi: f64,
        s_lo: f64,
        s_hi: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
