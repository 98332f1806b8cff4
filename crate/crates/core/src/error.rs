use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("deformation parameters differ: {0} vs {1}")]
    MismatchedHbar(f64, f64),
    #[error("label dimensions differ: {0} vs {1}")]
    MismatchedDimension(usize, usize),
    #[error("Poisson bracket requires hbar = 0, got {0}")]
    NonzeroHbar(f64),
    #[error("operation requires hbar > 0")]
    ZeroHbar,
    #[error("deformation parameter must be nonnegative, got {0}")]
    NegativeHbar(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("spatial dimension {0} is too low (need nu >= 3)")]
    DimensionTooLow(usize),
    #[error("invalid multi-index {0:?}")]
    InvalidIndex(Vec<u32>),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("mode-sum tail bound {bound:e} exceeds tolerance {tol:e}")]
    TailToleranceExceeded { bound: f64, tol: f64 },
    #[error("invalid state specification: {0}")]
    InvalidSpec(String),
    #[error("input outside the admissible domain: {0}")]
    DomainViolation(String),
    #[error("chemical potential {mu} out of range (must be < {limit})")]
    ChemicalPotentialOutOfRange { mu: f64, limit: f64 },
    #[error("root bracket failure: {0}")]
    BracketFailure(String),
    #[error("target density must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("density {rho} is not above the critical density {rho_c} at h = {h}")]
    SubcriticalDensity { h: f64, rho: f64, rho_c: f64 },
    #[error("finite-difference step too large: Richardson ratio {ratio} (expected about 4)")]
    StepTooLarge { ratio: f64 },
}

impl Error {
    /// Failures of a numerical certificate rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure(_)
                | Error::TailToleranceExceeded { .. }
                | Error::BracketFailure(_)
                | Error::StepTooLarge { .. }
        )
    }
}
