use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are split into two families by [`FusionError::is_numeric`]: input
/// validation failures (the caller handed us something malformed) and numeric
/// degeneracies (the inputs are well formed but a required inverse does not
/// exist at the requested parameter).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires a 2x2 matrix, found dimension {found}")]
    DimensionNotTwo { found: usize },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("gains violate K_A + K_B = I (residual {residual:.3e})")]
    GainConstraintViolated { residual: f64 },

    #[error("R = C_A + C_B - P_AB - P_AB^T is singular")]
    SingularR,

    #[error("covariance is singular")]
    SingularCovariance,

    #[error("omega = {0} is outside [0, 1]")]
    OmegaOutOfRange(f64),

    #[error("parameter {name} = {value} is out of range")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("split is degenerate at omega = {omega}: P + omega Q is singular")]
    DegenerateSplit { omega: f64 },

    #[error("rho-family denominator vanishes (rho = {rho}, omega = {omega})")]
    DegenerateDenominator { rho: f64, omega: f64 },

    #[error("direction vector is zero")]
    ZeroVector,

    #[error("direction for rank-one construction is zero")]
    ZeroDirection,

    #[error("direction falls in case {found}, operation requires the interior case")]
    WrongCase { found: u8 },

    #[error("cost function returned a non-finite value at omega = {omega}")]
    NonFiniteCost { omega: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl FusionError {
    /// Stable identifier used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NotSquare { .. } => "NotSquare",
            Self::NotSymmetric { .. } => "NotSymmetric",
            Self::NotPositiveSemiDefinite { .. } => "NotPositiveSemiDefinite",
            Self::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::DimensionNotTwo { .. } => "DimensionNotTwo",
            Self::SingularMatrix => "SingularMatrix",
            Self::GainConstraintViolated { .. } => "GainConstraintViolated",
            Self::SingularR => "SingularR",
            Self::SingularCovariance => "SingularCovariance",
            Self::OmegaOutOfRange(_) => "OmegaOutOfRange",
            Self::ParameterOutOfRange { .. } => "ParameterOutOfRange",
            Self::DegenerateSplit { .. } => "DegenerateSplit",
            Self::DegenerateDenominator { .. } => "DegenerateDenominator",
            Self::ZeroVector => "ZeroVector",
            Self::ZeroDirection => "ZeroDirection",
            Self::WrongCase { .. } => "WrongCase",
            Self::NonFiniteCost { .. } => "NonFiniteCost",
            Self::InvalidInput(_) => "InvalidInput",
        }
    }

    /// True for degeneracies of well-formed inputs, false for validation failures.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Self::SingularMatrix
                | Self::SingularR
                | Self::SingularCovariance
                | Self::DegenerateSplit { .. }
                | Self::DegenerateDenominator { .. }
                | Self::NonFiniteCost { .. }
        )
    }
}

pub type Result<T, E = FusionError> = std::result::Result<T, E>;
