use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix {0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("matrix {0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("matrix {0} is not positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("bad spectral density on line {line}: {reason}")]
    BadSpectralDensity { line: usize, reason: String },
    #[error("eigenvalue computation did not converge")]
    EigenFailure,
    #[error("normal mode {0} has zero frequency (K is singular)")]
    ZeroMode(usize),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("divergent memory kernel: {0}")]
    DivergentKernel(String),
    #[error("value is singular at zero frequency")]
    SingularAtZero,
    #[error("argument outside the open right half plane (Re s = {0})")]
    OutOfDomain(f64),
    #[error("Abel regularization did not settle (extrapolants differ by {0:e})")]
    RegularizationFailure(f64),
    #[error("matrix is singular at the evaluation point")]
    SingularMatrix,
    #[error("I + S is singular, Cayley transform undefined")]
    CayleySingular,
    #[error("transfer evaluation failed: {0}")]
    EvaluationFailure(String),
    #[error("input series is not on the simulation grid: {0}")]
    NonuniformInput(String),
    #[error("time {0} is outside the data range")]
    OutOfRange(f64),
    #[error("series has not decayed at the window ends (endpoint/max = {0:e})")]
    WindowTooShort(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::NotPositiveSemidefinite(_) => "NotPositiveSemidefinite",
            Error::BadSpectralDensity { .. } => "BadSpectralDensity",
            Error::EigenFailure => "EigenFailure",
            Error::ZeroMode(_) => "ZeroMode",
            Error::DivergentIntegral(_) => "DivergentIntegral",
            Error::DivergentKernel(_) => "DivergentKernel",
            Error::SingularAtZero => "SingularAtZero",
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::RegularizationFailure(_) => "RegularizationFailure",
            Error::SingularMatrix => "SingularMatrix",
            Error::CayleySingular => "CayleySingular",
            Error::EvaluationFailure(_) => "EvaluationFailure",
            Error::NonuniformInput(_) => "NonuniformInput",
            Error::OutOfRange(_) => "OutOfRange",
            Error::WindowTooShort(_) => "WindowTooShort",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
