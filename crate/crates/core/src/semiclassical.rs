//! Mean-field steady states and deterministic dynamics of the field amplitude,
//! `d alpha/dt = i delta alpha - i g alpha* - eta |alpha|^2 alpha`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ComplexAmplitude, Method, ModelParams, ObservableSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSign {
    Plus,
    Minus,
    Vacuum,
}

/// One stationary solution of the mean-field equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateBranch {
    /// Semiclassical photon number `|alpha_s|^2`.
    pub n_s: f64,
    /// `exp(2 i phi)`; set to 1 on the vacuum branch where the phase is undefined.
    pub phase_factor: Complex64,
    pub x_s: f64,
    pub p_s: f64,
    pub branch_sign: BranchSign,
}

impl SteadyStateBranch {
    pub fn amplitude(&self) -> ComplexAmplitude {
        ComplexAmplitude::new(
            self.x_s * std::f64::consts::FRAC_1_SQRT_2,
            self.p_s * std::f64::consts::FRAC_1_SQRT_2,
        )
    }
}

/// Semiclassical photon number, zero above threshold.
pub fn semiclassical_photon_number(params: &ModelParams) -> f64 {
    if params.below_threshold() {
        let (d, g) = (params.delta(), params.g());
        ((g - d) * (g + d)).sqrt() / params.eta()
    } else {
        0.0
    }
}

/// All stationary solutions: `{plus, minus, vacuum}` below threshold
/// (`g^2 > delta^2`), only the vacuum otherwise.
pub fn steady_states(params: &ModelParams) -> Vec<SteadyStateBranch> {
    let vacuum = SteadyStateBranch {
        n_s: 0.0,
        phase_factor: Complex64::new(1.0, 0.0),
        x_s: 0.0,
        p_s: 0.0,
        branch_sign: BranchSign::Vacuum,
    };
    if !params.below_threshold() {
        return vec![vacuum];
    }
    let (d, g, eta) = (params.delta(), params.g(), params.eta());
    let root = ((g - d) * (g + d)).sqrt();
    let n_s = root / eta;
    // exp(2i phi) = -i g / (root - i d) = (d - i root) / g
    let phase_factor = Complex64::new(0.0, -g) / Complex64::new(root, -d);
    // cos^2 phi = (g + d) / 2g, sin^2 phi = (g - d) / 2g, opposite signs
    let denom = (g * eta).sqrt();
    let x = (g + d).powf(0.75) * (g - d).powf(0.25) / denom;
    let p = -(g + d).powf(0.25) * (g - d).powf(0.75) / denom;
    let branch = |sign: f64, branch_sign| SteadyStateBranch {
        n_s,
        phase_factor,
        x_s: sign * x,
        p_s: sign * p,
        branch_sign,
    };
    vec![
        branch(1.0, BranchSign::Plus),
        branch(-1.0, BranchSign::Minus),
        vacuum,
    ]
}

/// Observables of the coherent state sitting on a mean-field branch. Both
/// branches share `n` and `<a^2> = alpha_s^2`; `g2` is 1 off the vacuum.
pub fn semiclassical_observables(params: &ModelParams) -> ObservableSet {
    let branch = steady_states(params)[0];
    let a2 = branch.n_s * branch.phase_factor;
    let g2 = (branch.n_s > 0.0).then_some(1.0);
    ObservableSet::from_photon_moments(branch.n_s, a2, g2, Method::Semiclassical)
}

/// Right-hand side of the mean-field equation.
pub fn drift(params: &ModelParams, alpha: ComplexAmplitude) -> ComplexAmplitude {
    drift_c(params, alpha.into()).into()
}

pub(crate) fn drift_c(params: &ModelParams, a: Complex64) -> Complex64 {
    let i = Complex64::i();
    i * params.delta() * a - i * params.g() * a.conj() - params.eta() * a.norm_sqr() * a
}

/// Sampled deterministic trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexAmplitude>,
}

impl Trajectory {
    pub fn last(&self) -> ComplexAmplitude {
        *self
            .states
            .last()
            .expect("trajectory holds the initial state")
    }
}

/// Integrates the mean-field equation with classical fixed-step RK4,
/// recording every `stride`-th step (and the final state).
pub fn evolve(
    params: &ModelParams,
    alpha0: ComplexAmplitude,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() || !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and t_final >= 0, got dt={dt} t_final={t_final}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1".into()));
    }
    if !alpha0.is_finite() {
        return Err(Error::NonFinite("initial amplitude"));
    }
    let n_s = semiclassical_photon_number(params);
    let rate = params
        .delta()
        .abs()
        .max(params.g())
        .max(params.eta() * n_s)
        .max(params.eta() * alpha0.norm_sqr());
    if dt * rate > 0.1 {
        return Err(Error::StabilityGuard(format!(
            "dt * max rate = {} exceeds 0.1",
            dt * rate
        )));
    }
    let divergence_limit = if params.below_threshold() {
        1e3 * n_s
    } else {
        f64::INFINITY
    };

    let steps = (t_final / dt).round() as usize;
    let mut a: Complex64 = alpha0.into();
    let mut times = vec![0.0];
    let mut states = vec![alpha0];
    let f = |z: Complex64| drift_c(params, z);
    for step in 1..=steps {
        let k1 = f(a);
        let k2 = f(a + 0.5 * dt * k1);
        let k3 = f(a + 0.5 * dt * k2);
        let k4 = f(a + dt * k3);
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t = step as f64 * dt;
        let norm_sqr = a.norm_sqr();
        if !norm_sqr.is_finite() || norm_sqr > divergence_limit {
            return Err(Error::Divergence { time: t, norm_sqr });
        }
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(a.into());
        }
    }
    Ok(Trajectory { times, states })
}
