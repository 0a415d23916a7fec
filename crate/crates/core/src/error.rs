use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Variants are grouped by [`ErrorKind`] so front-ends can map them onto
/// stable exit codes without matching every variant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside its domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("\"param\": invalid parameter (not consistent with the specified distribution): {family}: {reason}")]
    InvalidParameter {
        family: &'static str,
        reason: String,
    },

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("sample must contain at least {min} observations, got {n}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("observation {index} is not a finite number")]
    NonFinite { index: usize },

    #[error("{family}: {count} observation(s) outside the support {support} (first indices: {indices:?})")]
    OutOfSupport {
        family: &'static str,
        support: String,
        count: usize,
        indices: Vec<usize>,
    },

    #[error("{0}")]
    Data(String),

    #[error("window size {m} invalid for sample size {n}: need 1 <= m < n/2")]
    WindowRange { m: usize, n: usize },

    #[error("zero spacing at window size {m}: ties are too dense for this window")]
    ZeroSpacing { m: usize },

    #[error("Too many ties to compute Vasicek estimate (largest tie run {max_tie_run}, largest candidate window {m_max}); consider enabling `extend`")]
    TooManyTies { max_tie_run: usize, m_max: usize },

    #[error("The sample entropy is greater than empirical maximal entropy for all possible window sizes; the sample may be too small or is unlikely to be drawn from the null distribution.")]
    ConstraintViolated,

    #[error("{family}: maximum likelihood estimation failed: {reason} (iterations {iterations}, gradient norm {grad_norm:e})")]
    Estimation {
        family: &'static str,
        reason: String,
        iterations: usize,
        grad_norm: f64,
    },

    #[error("all {b} Monte-Carlo replicates were ignored; no p-value can be computed")]
    AllReplicatesIgnored { b: usize },

    #[error("closed-form entropy is not available for the {0} family")]
    Unsupported(&'static str),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("scenario line {line}: {message}")]
    Scenario { line: usize, message: String },
}

/// Coarse classification of [`Error`] values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Data,
    Parameter,
    Constraint,
    Ties,
    Estimation,
    Usage,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFinite { .. }
            | Error::SampleTooSmall { .. }
            | Error::OutOfSupport { .. }
            | Error::Data(_) => ErrorKind::Data,
            Error::InvalidParameter { .. } | Error::UnknownFamily(_) | Error::Domain { .. } => {
                ErrorKind::Parameter
            }
            Error::ConstraintViolated => ErrorKind::Constraint,
            Error::TooManyTies { .. } | Error::ZeroSpacing { .. } => ErrorKind::Ties,
            Error::Estimation { .. } | Error::AllReplicatesIgnored { .. } => ErrorKind::Estimation,
            Error::WindowRange { .. }
            | Error::Unsupported(_)
            | Error::InvalidOption(_)
            | Error::Scenario { .. } => ErrorKind::Usage,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
