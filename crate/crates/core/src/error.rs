use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Rejected input. Every simulator validates its preconditions up front and
/// never panics on caller-provided data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Operand matrices (or vectors) whose dimensions cannot be combined.
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A scalar parameter outside its admissible range.
    InvalidParameter {
        name: &'static str,
        value: u64,
        expected: &'static str,
    },
    /// A real-valued parameter that is negative, zero where forbidden, or not finite.
    InvalidReal { name: &'static str, expected: &'static str },
    /// Element buffer length does not match `rows * cols`.
    ElementCount { expected: usize, actual: usize },
    /// Operand outside the signed 8-bit range accepted by the simulators.
    OperandRange { index: usize, value: i64 },
    /// A fabric too small for the requested problem.
    Capacity {
        what: &'static str,
        required: usize,
        available: usize,
    },
    Other(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, left, right } => write!(
                f,
                "{op}: dimension mismatch between {}x{} and {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::InvalidParameter { name, value, expected } => {
                write!(f, "invalid {name} = {value}: expected {expected}")
            }
            Error::InvalidReal { name, expected } => write!(f, "invalid {name}: expected {expected}"),
            Error::ElementCount { expected, actual } => {
                write!(f, "element count {actual} does not match shape ({expected} expected)")
            }
            Error::OperandRange { index, value } => {
                write!(f, "operand {value} at index {index} outside [-128, 127]")
            }
            Error::Capacity { what, required, available } => {
                write!(f, "{what}: need {required}, have {available}")
            }
            Error::Other(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}
