use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidArgument(String),
    /// A configuration file was missing a field or inconsistent.
    InvalidConfig(String),
    /// The measurement matrix is rank-deficient or otherwise unusable.
    DegenerateEnsemble(String),
    /// The signal length is not supported by the requested transform.
    UnsupportedLength(String),
    /// The requested gradient sparsity does not fit the signal size.
    SparsityTooLarge(String),
    /// The instance is too large for the exact certificate enumeration.
    CertificateScale(String),
    /// The instance is too large for the exact LP oracle.
    OracleScale(String),
    /// A closed-form bound was evaluated outside its regime of validity.
    OutOfRegime(String),
    /// A Monte Carlo estimator rejected too many samples to be trusted.
    EstimatorUnstable(String),
    /// The linear constraints admit no feasible point.
    Infeasible(String),
    /// A search exhausted its range without reaching the target.
    Saturation(String),
    Io(std::io::Error),
    Json(serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            Error::DegenerateEnsemble(m) => write!(f, "degenerate ensemble: {m}"),
            Error::UnsupportedLength(m) => write!(f, "unsupported length: {m}"),
            Error::SparsityTooLarge(m) => write!(f, "sparsity too large: {m}"),
            Error::CertificateScale(m) => write!(f, "certificate scale guard: {m}"),
            Error::OracleScale(m) => write!(f, "oracle scale guard: {m}"),
            Error::OutOfRegime(m) => write!(f, "out of regime: {m}"),
            Error::EstimatorUnstable(m) => write!(f, "estimator unstable: {m}"),
            Error::Infeasible(m) => write!(f, "infeasible: {m}"),
            Error::Saturation(m) => write!(f, "saturation: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Json(e) => write!(f, "json error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}
