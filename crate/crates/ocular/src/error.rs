use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Image or buffer geometry is invalid (zero dimension, length mismatch).
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// A rectangle or feature does not fit inside its host image or window.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data is unusable (empty class, dimension mismatch, empty series).
    #[error("invalid input: {0}")]
    Input(String),

    /// Training data has insufficient rank for the requested decomposition.
    #[error("rank deficiency: {0}")]
    Rank(String),

    /// Operation is undefined on this input (e.g. all-zero mask).
    #[error("domain error: {0}")]
    Domain(String),

    /// No face found by the detector at any attempted configuration.
    #[error("no face detected")]
    NoFace,

    /// Iris/eye localization produced no usable estimate.
    #[error("localization failed: {0}")]
    LocalizationFailed(String),

    /// Corner response too weak to pick eye corners.
    #[error("corner detection failed: {0}")]
    CornerFailure(String),

    /// Tracker exceeded the consecutive-failure budget.
    #[error("track lost at frame {0}")]
    TrackLost(usize),

    /// Matrix inversion or other numeric step failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Constraint set is empty or malformed.
    #[error("infeasible constraint: {0}")]
    Constraint(String),

    /// Operation called in the wrong state (e.g. eye region of a negative result).
    #[error("invalid state: {0}")]
    State(String),

    /// Statistic undefined for this input (e.g. zero variance).
    #[error("undefined statistic: {0}")]
    Undefined(String),

    /// Malformed file content.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
