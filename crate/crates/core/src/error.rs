use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("operator is not Hermitian (imaginary part {imag:e})")]
    NotHermitian { imag: f64 },

    #[error("generator is not diagonal or not anti-Hermitian: {0}")]
    InvalidDiagonalGenerator(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("reference state is not a computational basis state of the declared sector")]
    InvalidReference,

    #[error("sector is empty")]
    EmptySector,

    #[error("degenerate fit: target norm {0:e} below threshold")]
    DegenerateFit(f64),

    #[error("moment input invalid: {0}")]
    InvalidMoments(String),

    #[error("causality violated: pole at {energy} in {sector} sector")]
    Causality { energy: f64, sector: &'static str },

    #[error("zero total weight in distribution")]
    ZeroWeight,

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
