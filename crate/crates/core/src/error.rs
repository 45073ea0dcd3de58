use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the documented domain of an operation.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular design: triangular factor diagonal {value:e} at column {column} is below {threshold:e}")]
    SingularDesign {
        column: usize,
        value: f64,
        threshold: f64,
    },

    #[error("integrand is not finite at h = {at}")]
    NonFiniteIntegrand { at: f64 },

    /// A variance that must be nonnegative came out clearly negative.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("search did not converge: {0}")]
    Convergence(String),

    #[error("evaluation failed at gamma = {gamma}: {source}")]
    AtGamma {
        gamma: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True when the error reflects bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidArgument { .. } | Error::DimensionMismatch(_) => true,
            Error::AtGamma { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<f64> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(Error::invalid(
            name,
            format!("must lie strictly inside (0, 1), got {p}"),
        ))
    }
}

pub(crate) fn check_finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(name, format!("must be finite, got {x}")))
    }
}

pub(crate) fn check_positive(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and positive, got {x}"),
        ))
    }
}
