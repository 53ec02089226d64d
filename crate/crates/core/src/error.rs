use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration or input value violates its documented domain.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// Element (or other) index outside `0..len`.
    IndexOutOfRange { index: usize, len: usize },
    /// Matrix or vector dimensions do not fit the operation.
    DimensionMismatch { expected: usize, found: usize },
    /// A target lies outside the region a model is valid for.
    TargetOutOfRegion { index: usize, range_m: f64, limit_m: f64 },
    /// Input contains NaN or infinite entries.
    NonFinite,
    /// The guard rail of a brute-force routine was exceeded.
    InstanceTooLarge { what: &'static str, value: usize, max: usize },
    /// A spectrum had fewer usable peaks than requested targets.
    DetectionFailure { wanted: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => write!(f, "invalid `{name}`: {reason}"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::TargetOutOfRegion { index, range_m, limit_m } => write!(
                f,
                "target {index} at {range_m} m is outside the near-field region (0, {limit_m}) m"
            ),
            Error::NonFinite => f.write_str("input contains non-finite values"),
            Error::InstanceTooLarge { what, value, max } => {
                write!(f, "{what} = {value} exceeds the supported maximum {max}")
            }
            Error::DetectionFailure { wanted, found } => {
                write!(f, "detection failure: wanted {wanted} peaks, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
