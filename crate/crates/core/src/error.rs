use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(
        "hypergeometric denominator parameter {index} = {value} is zero or a negative integer"
    )]
    InvalidDenominator { index: usize, value: String },

    #[error("series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("series overflowed after {terms} terms")]
    SeriesOverflow { terms: usize },

    #[error("gamma function pole at {0}")]
    GammaPole(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("stability guard violated: {0}")]
    StabilityGuard(String),

    #[error("trajectory diverged at t = {time}: |alpha|^2 = {norm_sqr}")]
    Divergence { time: f64, norm_sqr: f64 },

    #[error("{aborted} of {total} trajectories aborted (limit 1%)")]
    TooManyAborted { aborted: usize, total: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
