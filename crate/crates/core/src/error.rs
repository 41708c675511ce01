use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pattern length {got} does not match chain length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("pattern bit not allowed at index {0}")]
    ForbiddenBit(usize),
    #[error("unknown initial pattern `{0}`")]
    UnknownPattern(String),
    #[error("matrix is not unitary")]
    NonUnitary,
    #[error("index {idx} out of range for n={n}")]
    IndexOutOfRange { idx: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("controlled reset with a quantum control at index {0}")]
    QuantumControlledReset(usize),
    #[error("chain too short: {0}")]
    InsufficientLength(String),
    #[error("triple-CU margins insufficient: {0}")]
    InsufficientMargins(String),
    #[error("transport leaves the margins: {0}")]
    OutOfMargins(String),
    #[error("no control unit found")]
    NoCuFound,
    #[error("{0} control units active, expected one")]
    MultipleCusActive(usize),
    #[error("control and target coincide")]
    SameIndex,
    #[error("ancilla cell is not classical 0")]
    AncillaNotZero,
    #[error("labels are not canonical: {0}")]
    NonCanonicalLabels(String),
    #[error("level {level} exceeds concatenation depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("dense oracle limited to n <= 24 (got {0})")]
    TooLarge(usize),
    #[error("unknown macro `{0}`")]
    UnknownMacro(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("program fingerprint {program} does not match layout {layout}")]
    FingerprintMismatch { program: String, layout: String },
    #[error("solver did not converge (residual {0:e})")]
    ConvergenceFailure(f64),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ForbiddenBit(_) => "ForbiddenBit",
            Error::UnknownPattern(_) => "UnknownPattern",
            Error::NonUnitary => "NonUnitary",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::QuantumControlledReset(_) => "QuantumControlledReset",
            Error::InsufficientLength(_) => "InsufficientLength",
            Error::InsufficientMargins(_) => "InsufficientMargins",
            Error::OutOfMargins(_) => "OutOfMargins",
            Error::NoCuFound => "NoCuFound",
            Error::MultipleCusActive(_) => "MultipleCusActive",
            Error::SameIndex => "SameIndex",
            Error::AncillaNotZero => "AncillaNotZero",
            Error::NonCanonicalLabels(_) => "NonCanonicalLabels",
            Error::LevelOutOfRange { .. } => "LevelOutOfRange",
            Error::TooLarge(_) => "TooLarge",
            Error::UnknownMacro(_) => "UnknownMacro",
            Error::Parse { .. } => "Parse",
            Error::FingerprintMismatch { .. } => "FingerprintMismatch",
            Error::ConvergenceFailure(_) => "ConvergenceFailure",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
