use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty matrix or vector")]
    Empty,
    #[error("expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian: max |M - M^dagger| = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not unitary: max |U U^dagger - I| = {defect:.3e}")]
    NotUnitary { defect: f64 },
    #[error("vector is not normalised: norm = {norm}")]
    NotNormalized { norm: f64 },
    #[error("time {time} and hbar {hbar} must be positive and finite")]
    InvalidTimeScale { time: f64, hbar: f64 },
    #[error("eigendecomposition is defective: reconstruction residual {residual:.3e}")]
    Defective { residual: f64 },
    #[error("eigensolver did not converge")]
    NoConvergence,
}
