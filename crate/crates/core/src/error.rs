use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix product disagrees with closed form by {deviation:e}")]
    ClosedFormMismatch { deviation: f64 },

    #[error("exponent {exponent} of variable `{variable}` exceeds truncation order {order}")]
    OrderOverflow {
        variable: String,
        exponent: u32,
        order: u32,
    },

    #[error("series exponential requires a zero constant term, found {0}")]
    NonzeroConstantTerm(num_complex::Complex64),

    #[error("series have different variables or truncation orders")]
    VariableMismatch,

    #[error("permanent of a {0}x{0} matrix exceeds the supported size")]
    DimensionTooLarge(usize),

    #[error("photon number not conserved: {input} in, {output} out")]
    PhotonNumberMismatch { input: u32, output: u32 },

    #[error("herald outcome is forbidden (probability {0:e})")]
    HeraldImpossible(f64),

    #[error("Fock cutoff {cutoff} is inadequate (tail mass {tail_mass:e})")]
    CutoffInadequate { cutoff: usize, tail_mass: f64 },

    #[error("herald outcomes leave residual probability mass {0:e}")]
    ResidualMassTooLarge(f64),

    #[error("photon numbers ({0}, {1}, {2}, {3}) are outside the 0/1 coefficient table")]
    OutOfTableRange(u32, u32, u32, u32),

    #[error("total herald order {0} exceeds the series guard of 12")]
    SeriesOrderTooLarge(u32),

    #[error("variance must be positive, got {0}")]
    NonpositiveVariance(f64),

    #[error("grid holds {found}, expected {expected}")]
    QuantityMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("phi axis is not symmetric about pi")]
    AxisNotSymmetric,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable code, used in serialized error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ClosedFormMismatch { .. } => "ClosedFormMismatch",
            Error::OrderOverflow { .. } => "OrderOverflow",
            Error::NonzeroConstantTerm(_) => "NonzeroConstantTerm",
            Error::VariableMismatch => "VariableMismatch",
            Error::DimensionTooLarge(_) => "DimensionTooLarge",
            Error::PhotonNumberMismatch { .. } => "PhotonNumberMismatch",
            Error::HeraldImpossible(_) => "HeraldImpossible",
            Error::CutoffInadequate { .. } => "CutoffInadequate",
            Error::ResidualMassTooLarge(_) => "ResidualMassTooLarge",
            Error::OutOfTableRange(..) => "OutOfTableRange",
            Error::SeriesOrderTooLarge(_) => "SeriesOrderTooLarge",
            Error::NonpositiveVariance(_) => "NonpositiveVariance",
            Error::QuantityMismatch { .. } => "QuantityMismatch",
            Error::AxisNotSymmetric => "AxisNotSymmetric",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}
