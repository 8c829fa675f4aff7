use std::fmt;

/// Errors produced by grid construction, evaluators and solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A time range with `start >= end`.
    InvalidRange { start: f64, end: f64 },
    /// A cell count below the supported minimum.
    InvalidSize { n: usize, min: usize },
    /// Node indices out of order (`i >= j`).
    IndexOrder { i: usize, j: usize },
    /// A parameter outside its mathematical domain.
    InvalidDomain { what: &'static str, value: f64 },
    /// A required time does not land on a grid node.
    GridAlignment { t: f64 },
    /// Operation requires a uniform grid.
    NonUniformGrid,
    /// The slack `b` lies outside `[0, b_max]` for the instance.
    InfeasibleInstance { b: f64, b_max: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRange { start, end } => {
                write!(f, "invalid time range: start {start} >= end {end}")
            }
            Error::InvalidSize { n, min } => {
                write!(f, "invalid cell count {n}, need at least {min}")
            }
            Error::IndexOrder { i, j } => write!(f, "node indices out of order: {i} >= {j}"),
            Error::InvalidDomain { what, value } => {
                write!(f, "{what} = {value} outside its domain")
            }
            Error::GridAlignment { t } => {
                write!(f, "time {t} does not align with a grid node")
            }
            Error::NonUniformGrid => write!(f, "operation requires a uniform grid"),
            Error::InfeasibleInstance { b, b_max } => {
                write!(f, "slack b = {b} outside [0, {b_max}]")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
