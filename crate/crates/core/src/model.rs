//! Domain types shared by every solution method.
//!
//! All rates are angular frequencies in arbitrary but common units. Internally
//! the methods work at `eta = 1`; [`ModelParams::normalized`] gives the two
//! dimensionless ratios everything depends on.

use std::f64::consts::SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// The physical triple `(delta, g, eta)` of one oscillator: detuning, two-photon
/// pump rate and two-photon dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    delta: f64,
    g: f64,
    eta: f64,
}

impl ModelParams {
    pub fn new(delta: f64, g: f64, eta: f64) -> Result<Self> {
        if !delta.is_finite() || !g.is_finite() || !eta.is_finite() {
            return Err(Error::NonFinite("ModelParams"));
        }
        if eta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eta must be > 0, got {eta}"
            )));
        }
        if g < 0.0 {
            return Err(Error::InvalidParameter(format!("g must be >= 0, got {g}")));
        }
        Ok(Self { delta, g, eta })
    }

    /// Parameters given directly in units of `eta` (so `eta = 1`).
    pub fn from_ratios(delta_over_eta: f64, g_over_eta: f64) -> Result<Self> {
        Self::new(delta_over_eta, g_over_eta, 1.0)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta_over_eta(&self) -> f64 {
        self.delta / self.eta
    }

    pub fn g_over_eta(&self) -> f64 {
        self.g / self.eta
    }

    /// Same physics expressed with `eta = 1`.
    pub fn normalized(&self) -> ModelParams {
        ModelParams {
            delta: self.delta / self.eta,
            g: self.g / self.eta,
            eta: 1.0,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(delta, self.g, self.eta)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.delta, self.g, eta)
    }

    /// True when the pump exceeds the detuning and the oscillator has
    /// non-vacuum semiclassical steady states.
    pub fn below_threshold(&self) -> bool {
        self.g * self.g > self.delta * self.delta
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "delta={} g={} eta={}", self.delta, self.g, self.eta)
    }
}

/// Gap between the ground and first excited level of the linear problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyGap {
    Open(f64),
    /// `delta < g`: spectral collapse, no stable ground state.
    Closed,
}

impl EnergyGap {
    pub fn value(&self) -> Option<f64> {
        match *self {
            EnergyGap::Open(v) => Some(v),
            EnergyGap::Closed => None,
        }
    }
}

pub fn energy_gap(params: &ModelParams) -> EnergyGap {
    let (d, g) = (params.delta, params.g);
    if d >= g {
        // (d - g)(d + g) avoids cancellation close to the critical point.
        EnergyGap::Open(((d - g) * (d + g)).sqrt())
    } else {
        EnergyGap::Closed
    }
}

/// Coherent field amplitude `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub const ZERO: ComplexAmplitude = ComplexAmplitude { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn to_quadratures(&self) -> Result<QuadratureState> {
        if !self.is_finite() {
            return Err(Error::NonFinite("ComplexAmplitude"));
        }
        Ok(QuadratureState {
            x: SQRT_2 * self.re,
            p: SQRT_2 * self.im,
        })
    }
}

impl From<Complex64> for ComplexAmplitude {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<ComplexAmplitude> for Complex64 {
    fn from(a: ComplexAmplitude) -> Self {
        Complex64::new(a.re, a.im)
    }
}

/// Photonic quadratures `x = sqrt(2) Re alpha`, `p = sqrt(2) Im alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureState {
    pub x: f64,
    pub p: f64,
}

impl QuadratureState {
    pub fn new(x: f64, p: f64) -> Result<Self> {
        if !x.is_finite() || !p.is_finite() {
            return Err(Error::NonFinite("QuadratureState"));
        }
        Ok(Self { x, p })
    }

    pub fn to_amplitude(&self) -> Result<ComplexAmplitude> {
        if !self.x.is_finite() || !self.p.is_finite() {
            return Err(Error::NonFinite("QuadratureState"));
        }
        Ok(ComplexAmplitude {
            re: self.x / SQRT_2,
            im: self.p / SQRT_2,
        })
    }
}

pub fn amplitude_to_quadratures(a: ComplexAmplitude) -> Result<QuadratureState> {
    a.to_quadratures()
}

pub fn quadratures_to_amplitude(q: QuadratureState) -> Result<ComplexAmplitude> {
    q.to_amplitude()
}

/// Which route produced an [`ObservableSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Semiclassical,
    Exact,
    Boltzmann,
    Langevin,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Semiclassical,
        Method::Exact,
        Method::Boltzmann,
        Method::Langevin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Semiclassical => "semiclassical",
            Method::Exact => "exact",
            Method::Boltzmann => "boltzmann",
            Method::Langevin => "langevin",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semiclassical" => Ok(Method::Semiclassical),
            "exact" => Ok(Method::Exact),
            "boltzmann" => Ok(Method::Boltzmann),
            "langevin" => Ok(Method::Langevin),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// Standard errors attached to Monte-Carlo observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableErrors {
    pub n: f64,
    pub re_a2: f64,
    pub im_a2: f64,
    pub x2: f64,
    pub p2: f64,
    pub xp_sym: f64,
    pub g2: Option<f64>,
}

/// Steady-state observables of one parameter point.
///
/// `g2` is `None` when the photon number vanishes and the ratio is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableSet {
    /// `<a^dag a>`
    pub n: f64,
    /// `<a^2>`
    pub a2: Complex64,
    pub x2: f64,
    pub p2: f64,
    /// Symmetrized `<(x p)_s>`
    pub xp_sym: f64,
    pub g2: Option<f64>,
    pub method: Method,
    /// Present iff `method == Langevin`.
    pub errors: Option<ObservableErrors>,
}

impl ObservableSet {
    /// Builds the set from photon number and anomalous average, deriving the
    /// quadrature moments.
    pub fn from_photon_moments(n: f64, a2: Complex64, g2: Option<f64>, method: Method) -> Self {
        Self {
            n,
            a2,
            x2: n + a2.re + 0.5,
            p2: n - a2.re + 0.5,
            xp_sym: a2.im,
            g2,
            method,
            errors: None,
        }
    }

    /// Builds the set from symmetrized quadrature moments.
    pub fn from_quadrature_moments(
        x2: f64,
        p2: f64,
        xp_sym: f64,
        g2: Option<f64>,
        method: Method,
    ) -> Self {
        Self {
            n: 0.5 * (x2 + p2 - 1.0),
            a2: Complex64::new(0.5 * (x2 - p2), xp_sym),
            x2,
            p2,
            xp_sym,
            g2,
            method,
            errors: None,
        }
    }

    /// Largest absolute violation of the photon/quadrature moment identities
    /// `x2 = n + Re a2 + 1/2`, `p2 = n - Re a2 + 1/2`, `xp = Im a2`.
    pub fn moment_identity_residual(&self) -> f64 {
        let r1 = (self.x2 - (self.n + self.a2.re + 0.5)).abs();
        let r2 = (self.p2 - (self.n - self.a2.re + 0.5)).abs();
        let r3 = (self.xp_sym - self.a2.im).abs();
        r1.max(r2).max(r3)
    }

    pub fn is_finite(&self) -> bool {
        self.n.is_finite()
            && self.a2.re.is_finite()
            && self.a2.im.is_finite()
            && self.x2.is_finite()
            && self.p2.is_finite()
            && self.xp_sym.is_finite()
            && self.g2.map_or(true, f64::is_finite)
    }
}

/// Normalized second-order correlation from symmetrized Wigner moments.
///
/// Returns `None` when the denominator (twice the photon number) is not
/// positive.
pub fn g2_from_wigner_moments(x2: f64, p2: f64, x4: f64, x2p2: f64, p4: f64) -> Option<f64> {
    let denom = x2 + p2 - 1.0;
    if denom <= 0.0 {
        return None;
    }
    Some((x4 + 2.0 * x2p2 + p4 - 4.0 * x2 - 4.0 * p2 + 2.0) / (denom * denom))
}
