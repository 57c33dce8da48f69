use thiserror::Error;

/// Errors raised by the library. Theorem-level failures are never errors;
/// they are recorded as report entries.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("characteristic {0} is not prime")]
    NotPrime(u64),
    #[error("characteristic must be odd, got {0}")]
    EvenCharacteristic(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{k} exceeds the size cap {cap}")]
    FieldTooLarge { p: u64, k: u32, cap: u64 },
    #[error("{0} is not an odd prime power")]
    NotPrimePower(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("element index {index} out of range for a field of order {q}")]
    ElementOutOfRange { index: u64, q: u32 },
    #[error("malformed element encoding: {0}")]
    BadEncoding(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} requires {requirement}")]
    Usage { what: &'static str, requirement: String },
    #[error("{what}: {size} exceeds the enumeration cap {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },
    #[error("radius {0} is not part of this family")]
    UnknownRadius(u32),
    #[error("color {color} out of range (family has {t} colors)")]
    UnknownColor { color: usize, t: usize },
    #[error("vertex {vertex} out of range (universe has {n} vertices)")]
    UnknownVertex { vertex: usize, n: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("no spectral certificate for color {0}")]
    MissingCertificate(usize),
    #[error("character sum for m={index} has imaginary part {imag:e}")]
    ImaginaryResidue { index: u64, imag: f64 },
    #[error("terminal state: A and U are both empty")]
    TerminalState,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::BadEncoding(e.to_string())
    }
}

/// Fails with [`Error::CapExceeded`] when `size > cap`.
pub(crate) fn check_cap(what: &'static str, size: u128, cap: u128) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded { what, size, cap })
    } else {
        Ok(())
    }
}
