use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report. Variant names are stable: the CLI
/// prints them verbatim on stderr so scripts can match on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed cube header: {0}")]
    MalformedHeader(String),
    #[error("truncated cube payload: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("wavelength axis out of range: {0}")]
    AxisOutOfRange(String),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("wavelength axes do not match: {0}")]
    AxisMismatch(String),
    #[error("non-numeric cell at line {line}: {cell:?}")]
    NonNumericCell { line: usize, cell: String },
    #[error("subsample target {target} outside 1..={count}")]
    TargetOutOfRange { target: usize, count: usize },
    #[error("degenerate reference white: {0}")]
    DegenerateWhite(String),
    #[error("weight vector has {weights} entries but spectra have {bands}")]
    WeightLengthMismatch { weights: usize, bands: usize },
    #[error("zero spectrum: {0}")]
    ZeroSpectrum(String),
    #[error("image dimensions differ: {0}")]
    DimensionMismatch(String),
    #[error("{0}")]
    MissingConfig(String),
    #[error("shift amount {0} out of range 0..=31")]
    ShiftOutOfRange(u32),
    #[error("band count {0} is not a power of two in 1..=512")]
    NotPowerOfTwo(usize),
    #[error("magnitude overflow: {0}")]
    MagnitudeOverflow(String),
    #[error("unknown algorithm: {0}")]
    UnknownAlgorithm(String),
    #[error("unknown reference id: {0}")]
    UnknownReference(String),
    #[error("invalid band schedule: {0}")]
    ScheduleInvalid(String),
    #[error("duplicate reference id: {0}")]
    DuplicateId(String),
    #[error("failed to load reference: {0}")]
    LoadFailure(String),
    #[error("reference index corrupt: {0}")]
    IndexCorrupt(String),
}

impl Error {
    /// Stable name of the variant, e.g. `"AxisMismatch"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::TruncatedData { .. } => "TruncatedData",
            Error::AxisOutOfRange(_) => "AxisOutOfRange",
            Error::IoFailure { .. } => "IoFailure",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::AxisMismatch(_) => "AxisMismatch",
            Error::NonNumericCell { .. } => "NonNumericCell",
            Error::TargetOutOfRange { .. } => "TargetOutOfRange",
            Error::DegenerateWhite(_) => "DegenerateWhite",
            Error::WeightLengthMismatch { .. } => "WeightLengthMismatch",
            Error::ZeroSpectrum(_) => "ZeroSpectrum",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::MissingConfig(_) => "MissingConfig",
            Error::ShiftOutOfRange(_) => "ShiftOutOfRange",
            Error::NotPowerOfTwo(_) => "NotPowerOfTwo",
            Error::MagnitudeOverflow(_) => "MagnitudeOverflow",
            Error::UnknownAlgorithm(_) => "UnknownAlgorithm",
            Error::UnknownReference(_) => "UnknownReference",
            Error::ScheduleInvalid(_) => "ScheduleInvalid",
            Error::DuplicateId(_) => "DuplicateId",
            Error::LoadFailure(_) => "LoadFailure",
            Error::IndexCorrupt(_) => "IndexCorrupt",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
