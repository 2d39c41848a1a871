//! Complex special functions: Gamma, entire hypergeometric series and Hermite
//! polynomials.

mod gamma;
mod hermite;
mod hypergeometric;

pub use gamma::{complex_gamma, gamma};
pub use hermite::{hermite, MAX_HERMITE_ORDER};
pub use hypergeometric::{
    hyp0f1, hyp1f2, hyp2f3, pfq, pfq_with_tolerance, HypergeometricSpec, SeriesResult,
    DEFAULT_TOLERANCE, MAX_TERMS,
};
