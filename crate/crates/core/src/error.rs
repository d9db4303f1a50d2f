use thiserror::Error;

/// Errors produced by the compiler, simulator and supporting kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-tall matrix: {rows}x{cols}")]
    NonTall { rows: usize, cols: usize },
    #[error("not an isometry (residual {residual:.3e})")]
    NotIsometry { residual: f64 },
    #[error("not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid Kraus set: {0}")]
    InvalidKraus(String),
    #[error("invalid Choi matrix: {0}")]
    InvalidChoi(String),
    #[error("infeasible channel parameters: {0}")]
    Infeasible(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("rank/shape mismatch: {0}")]
    Plan(String),
    #[error("component not implementable in m+n qubits: {0}")]
    NotImplementable(String),
    #[error("template mismatch: {0}")]
    Template(String),
    #[error("invalid channel file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
