use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("gate at cycle {cycle}, bond {bond} is not unitary (max |U^dag U - 1| = {deviation:e})")]
    NonUnitary {
        cycle: usize,
        bond: usize,
        deviation: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("dimension {dim} exceeds cap {cap}")]
    TooLarge { dim: u128, cap: u128 },

    #[error("operator is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("basis is not orthonormal (residual {0:e})")]
    NotOrthonormal(f64),

    #[error("legal orbit is not a path: {0}")]
    OrbitNotPath(String),

    #[error("eigensolver did not converge after {matvecs} matvecs (best {estimate}, residual {residual:e})")]
    NoConvergence {
        matvecs: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("projection lemma hypothesis violated: J = {j} <= 2 ||H1|| = {two_norm}")]
    LemmaHypothesis { j: f64, two_norm: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
