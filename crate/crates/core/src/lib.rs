//! Steady states of the two-photon driven, two-photon dissipative quantum
//! oscillator, computed by four independent routes and cross-checked.

pub mod criticality;
pub mod equilibrium;
pub mod error;
pub mod exact;
pub mod langevin;
pub mod model;
pub mod quadrature;
pub mod semiclassical;
pub mod specfun;
pub mod validation;
pub mod wigner;

pub use error::{Error, Result};
pub use model::{
    energy_gap, ComplexAmplitude, EnergyGap, Method, ModelParams, ObservableErrors, ObservableSet,
    QuadratureState,
};
