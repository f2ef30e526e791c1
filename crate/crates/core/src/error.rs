use alloc::string::String;

/// Failures raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is singular (pivot magnitude {pivot:e})")]
    SingularMatrix { pivot: f64 },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("dimension {dim} exceeds the oracle cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("index {index} outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("Moebius denominator is nearly singular (smallest singular value <= {bound:e})")]
    NearSingularDenominator { bound: f64 },
    #[error("stereographic projection is singular")]
    SingularProjection,
    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("phase velocity is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("energy {energy} lies below the quadrature cutoff -{cutoff}")]
    EnergyBelowCutoff { energy: f64, cutoff: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
