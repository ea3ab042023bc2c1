use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SbsaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (valid: {min}..={max})")]
    Index {
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("eigensolver did not converge: {0}")]
    Numeric(String),

    #[error("target of {target} components not bracketed: N_chi ranged over {achieved_min}..={achieved_max} for chi in [{chi_min:e}, {chi_max:e}]")]
    Bracket {
        target: usize,
        achieved_min: usize,
        achieved_max: usize,
        chi_min: f64,
        chi_max: f64,
    },

    #[error("signal has no bound states (identically zero potential)")]
    NoBoundState,

    #[error("segmentation failed: {0}")]
    Segmentation(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("beat {beat}: {source}")]
    Beat {
        beat: usize,
        #[source]
        source: Box<SbsaError>,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Coarse classification used by front ends to map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numeric,
    InsufficientData,
}

impl SbsaError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            SbsaError::InvalidInput(_)
            | SbsaError::Domain(_)
            | SbsaError::Index { .. }
            | SbsaError::Io { .. } => ErrorKind::Input,
            SbsaError::Numeric(_)
            | SbsaError::Bracket { .. }
            | SbsaError::NoBoundState
            | SbsaError::Segmentation(_) => ErrorKind::Numeric,
            SbsaError::InsufficientData(_) | SbsaError::Degenerate(_) => {
                ErrorKind::InsufficientData
            }
            SbsaError::Beat { source, .. } => source.kind(),
        }
    }

    pub(crate) fn index(index: usize, min: usize, max: usize) -> Self {
        SbsaError::Index { index, min, max }
    }
}

pub type Result<T, E = SbsaError> = std::result::Result<T, E>;
