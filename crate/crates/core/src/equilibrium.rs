//! Effective Boltzmann-Gibbs description of the stationary state.
//!
//! In the variables `x` and `v = -2 G p - eta x^3 / 2` the stationary Wigner
//! function is thermal with mass `1/(2G)`, temperature `G/2` and potential
//! `U(x) = ((delta - G)/2) x^2 + (eta^2 / 48 G) x^6`. Returning to `(x, p)`:
//!
//! ```text
//! W(x, p) = exp[-2 (p + eta x^3 / 4G)^2 - U(x)/T] / Z0,   Z0 = sqrt(pi/2) Z / 2
//! w_R(x)  = exp[-U(x)/T] / Z
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{g2_from_wigner_moments, Method, ModelParams, ObservableSet};
use crate::quadrature::adaptive_simpson;
use crate::specfun::{gamma, hermite};

pub const MAX_P_ORDER: usize = 8;
pub const MAX_X_ORDER: usize = 12;

/// Integration cutoff: `(U(L) - U_min) / T >= TAIL_EXPONENT`.
const TAIL_EXPONENT: f64 = 40.0;
const RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveEquilibrium {
    pub mass: f64,
    pub t_eff: f64,
    pub quad_coeff: f64,
    pub sextic_coeff: f64,
    /// `ln Z` with `Z = integral exp(-U/T) dx`.
    pub log_partition: f64,
    pub params: ModelParams,
    /// `min U / T`, used to keep the integrands of order one.
    u_min_over_t: f64,
    cutoff: f64,
    /// `Z exp(u_min_over_t)`
    shifted_partition: f64,
}

/// `v = -2 G p - eta x^3 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryVelocity {
    pub v: f64,
}

impl AuxiliaryVelocity {
    pub fn from_quadratures(params: &ModelParams, x: f64, p: f64) -> Self {
        Self {
            v: -2.0 * params.g() * p - 0.5 * params.eta() * x.powi(3),
        }
    }

    /// Inverse map; `None` when `G = 0`.
    pub fn to_p(&self, params: &ModelParams, x: f64) -> Option<f64> {
        (params.g() > 0.0).then(|| -(self.v + 0.5 * params.eta() * x.powi(3)) / (2.0 * params.g()))
    }
}

impl EffectiveEquilibrium {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let (delta, g, eta) = (params.delta(), params.g(), params.eta());
        if !(g > 0.0) {
            return Err(Error::InvalidParameter(
                "effective equilibrium needs G > 0 (T = G/2)".into(),
            ));
        }
        let t_eff = 0.5 * g;
        let quad_coeff = 0.5 * (delta - g);
        let sextic_coeff = eta * eta / (48.0 * g);
        let mut eq = Self {
            mass: 1.0 / (2.0 * g),
            t_eff,
            quad_coeff,
            sextic_coeff,
            log_partition: 0.0,
            params: *params,
            u_min_over_t: 0.0,
            cutoff: 0.0,
            shifted_partition: 1.0,
        };
        let x_min = eq.potential_minima().first().copied().unwrap_or(0.0);
        eq.u_min_over_t = effective_potential(&eq, x_min) / t_eff;
        let probe = eq;
        let excess = |x: f64| effective_potential(&probe, x) / t_eff - probe.u_min_over_t;
        let mut hi = x_min.abs().max(1.0);
        while excess(hi) < TAIL_EXPONENT {
            hi *= 2.0;
        }
        let mut lo = x_min.abs();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) < TAIL_EXPONENT {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eq.cutoff = hi;
        // The peak value of the shifted integrand is 1, so the partition
        // function is at least of order the well width.
        let z = adaptive_simpson(
            |x| (-excess(x)).exp(),
            -eq.cutoff,
            eq.cutoff,
            RELATIVE_TOLERANCE * eq.cutoff.min(1.0) * 1e-2,
        )
        .map_err(|e| e.context("partition function"))?;
        eq.shifted_partition = z.value;
        eq.log_partition = z.value.ln() - eq.u_min_over_t;
        Ok(eq)
    }

    /// Nonzero minimizers `[+x0, -x0]` of `U` when `delta < G`, `[0]` otherwise.
    pub fn potential_minima(&self) -> Vec<f64> {
        if self.quad_coeff < 0.0 {
            // U' = 2 a x + 6 b x^5 = 0
            let x0 = (-self.quad_coeff / (3.0 * self.sextic_coeff)).powf(0.25);
            vec![x0, -x0]
        } else {
            vec![0.0]
        }
    }

    /// Half-width of the integration window.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Ridge of the Wigner function, `p = -eta x^3 / 4G`.
    pub fn ridge(&self, x: f64) -> f64 {
        -self.params.eta() * x.powi(3) / (4.0 * self.params.g())
    }

    /// Maximizers of `boltzmann_wigner`.
    pub fn wigner_maxima(&self) -> Vec<(f64, f64)> {
        self.potential_minima()
            .into_iter()
            .map(|x| (x, self.ridge(x)))
            .collect()
    }

    fn shifted_weight(&self, x: f64) -> f64 {
        (-(effective_potential(self, x) / self.t_eff - self.u_min_over_t)).exp()
    }

    /// `<g(x)>` under `w_R`, to relative tolerance ~1e-12 of `scale`.
    fn average<F: Fn(f64) -> f64>(&self, f: F, scale: f64) -> Result<f64> {
        let tol = RELATIVE_TOLERANCE * self.shifted_partition * scale;
        let r = adaptive_simpson(
            |x| f(x) * self.shifted_weight(x),
            -self.cutoff,
            self.cutoff,
            tol,
        )?;
        Ok(r.value / self.shifted_partition)
    }
}

pub fn effective_potential(eq: &EffectiveEquilibrium, x: f64) -> f64 {
    let x2 = x * x;
    eq.quad_coeff * x2 + eq.sextic_coeff * x2 * x2 * x2
}

pub fn boltzmann_wigner(eq: &EffectiveEquilibrium, x: f64, p: f64) -> f64 {
    let ridge = p - eq.ridge(x);
    let log_z0 = (0.5 * (0.5 * PI).sqrt()).ln() + eq.log_partition;
    (-2.0 * ridge * ridge - effective_potential(eq, x) / eq.t_eff - log_z0).exp()
}

pub fn reduced_wigner(eq: &EffectiveEquilibrium, x: f64) -> f64 {
    (-effective_potential(eq, x) / eq.t_eff - eq.log_partition).exp()
}

/// `<p^k x^m>` from the Gaussian p-structure of the stationary state:
/// `integral (-1)^k / (2 i sqrt 2)^k H_k(i sqrt2 (eta/4G) x^3) x^m w_R(x) dx`.
pub fn moment(eq: &EffectiveEquilibrium, k: usize, m: usize) -> Result<f64> {
    if k > MAX_P_ORDER || m > MAX_X_ORDER {
        return Err(Error::InvalidParameter(format!(
            "moment order (k={k}, m={m}) exceeds (k <= {MAX_P_ORDER}, m <= {MAX_X_ORDER})"
        )));
    }
    let c = eq.params.eta() / (4.0 * eq.params.g());
    let prefactor = Complex64::new(0.0, 2.0 * 2f64.sqrt()).powi(k as i32).inv()
        * if k % 2 == 0 { 1.0 } else { -1.0 };
    let term = |x: f64| {
        prefactor * hermite(k, Complex64::new(0.0, 2f64.sqrt() * c * x.powi(3))) * x.powi(m as i32)
    };
    // Natural magnitude of the result: <(x^2)^((m + 3k)/2)> ~ s^(m + 3k), s
    // the rms of x, plus the p-variance 1/4 contributing at every order.
    let s2 = eq.average(|x| x * x, 1.0)?.max(1e-300);
    let order = (m + 3 * k) as i32;
    let scale = (s2.sqrt().powi(order) * c.powi(k as i32))
        .max(0.5f64.powi(k as i32) * s2.sqrt().powi(m as i32));
    let re = eq.average(|x| term(x).re, scale)?;
    let im = eq
        .average(|x| term(x).im, scale)
        .map_err(|e| e.context("imaginary part of Hermite moment"))?;
    if im.abs() > 1e-10 * re.abs().max(scale) {
        return Err(Error::Quadrature(format!(
            "moment (k={k}, m={m}) has imaginary part {im} against real part {re}"
        )));
    }
    Ok(re)
}

/// Constant of `<x^2> = C (G/eta)^(2/3)` at `delta = G`: `sqrt(pi) / (3^(2/3) Gamma(7/6))`.
pub fn critical_x2_constant() -> f64 {
    PI.sqrt() / (3f64.powf(2.0 / 3.0) * gamma(7.0 / 6.0).expect("regular point"))
}

/// Constant of `<(xp)_s> = -C (G/eta)^(1/3)` at `delta = G`: `3^(2/3) Gamma(5/6) / Gamma(1/6)`.
pub fn critical_xp_constant() -> f64 {
    3f64.powf(2.0 / 3.0) * gamma(5.0 / 6.0).expect("regular point")
        / gamma(1.0 / 6.0).expect("regular point")
}

/// `<x^4>/<x^2>^2` of the pure sextic weight: `Gamma(5/6) Gamma(1/6) / pi`.
pub fn critical_g2_x_only() -> f64 {
    gamma(5.0 / 6.0).expect("regular point") * gamma(1.0 / 6.0).expect("regular point") / PI
}

/// Closed-form observables at `delta = G` (the detuning of `params` is
/// ignored). `g2` is the large-`G/eta` value 2.
pub fn critical_closed_forms(params: &ModelParams) -> ObservableSet {
    let g = params.g_over_eta();
    let x2 = critical_x2_constant() * g.powf(2.0 / 3.0);
    let xp = -critical_xp_constant() * g.cbrt();
    ObservableSet::from_quadrature_moments(x2, 0.5, xp, Some(2.0), Method::Boltzmann)
}

/// Raw symmetrized moments used to assemble the observable set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoltzmannMoments {
    pub x2: f64,
    pub p2: f64,
    pub xp: f64,
    pub x4: f64,
    pub x2p2: f64,
    pub p4: f64,
    pub x6: f64,
}

pub fn boltzmann_moments(eq: &EffectiveEquilibrium) -> Result<BoltzmannMoments> {
    Ok(BoltzmannMoments {
        x2: moment(eq, 0, 2)?,
        p2: moment(eq, 2, 0)?,
        xp: moment(eq, 1, 1)?,
        x4: moment(eq, 0, 4)?,
        x2p2: moment(eq, 2, 2)?,
        p4: moment(eq, 4, 0)?,
        x6: moment(eq, 0, 6)?,
    })
}

pub fn boltzmann_observables(params: &ModelParams) -> Result<ObservableSet> {
    let eq = EffectiveEquilibrium::new(params)?;
    let m = boltzmann_moments(&eq)?;
    let g2 = g2_from_wigner_moments(m.x2, m.p2, m.x4, m.x2p2, m.p4);
    Ok(ObservableSet::from_quadrature_moments(
        m.x2,
        m.p2,
        m.xp,
        g2,
        Method::Boltzmann,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn eq(d: f64, g: f64) -> EffectiveEquilibrium {
        EffectiveEquilibrium::new(&ModelParams::new(d, g, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn structure() {
        let e = eq(17.0, 20.0);
        assert_eq!(e.t_eff, 10.0);
        assert_eq!(e.mass * 40.0, 1.0);
        assert!(e.quad_coeff < 0.0);
        assert!(eq(20.0, 20.0).quad_coeff == 0.0);
        assert!(eq(23.0, 20.0).quad_coeff > 0.0);
        assert!(EffectiveEquilibrium::new(&ModelParams::new(1.0, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn potential_values() {
        let e = eq(20.0, 20.0);
        assert_eq!(effective_potential(&e, 0.0), 0.0);
        assert_relative_eq!(
            effective_potential(&e, 1.0),
            1.0 / 960.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn minima_match_mean_field_near_threshold() {
        // x0^4 = 8 G (G - delta) / eta^2
        let e = eq(19.0, 20.0);
        assert_relative_eq!(
            e.potential_minima()[0],
            160f64.powf(0.25),
            max_relative = 1e-14
        );
    }

    #[test]
    fn auxiliary_velocity_round_trip() {
        let p = ModelParams::new(17.0, 20.0, 1.0).unwrap();
        let v = AuxiliaryVelocity::from_quadratures(&p, 1.3, -0.7);
        assert_relative_eq!(v.to_p(&p, 1.3).unwrap(), -0.7, max_relative = 1e-14);
    }

    #[test]
    fn reduced_normalization() {
        for d in [0.0, 17.0, 20.0, 23.0, 30.0] {
            let e = eq(d, 20.0);
            let l = e.cutoff();
            let z = simpson(|x| reduced_wigner(&e, x), -l, l, 20001);
            assert!((z - 1.0).abs() < 1e-8, "{d}: {z}");
            assert_relative_eq!(reduced_wigner(&e, 1.1), reduced_wigner(&e, -1.1));
        }
    }

    #[test]
    fn critical_closed_form_values() {
        let s = critical_closed_forms(&ModelParams::new(20.0, 20.0, 1.0).unwrap());
        // Gamma(7/6) = 0.92771933363003, Gamma(5/6) = 1.12878702990812,
        // Gamma(1/6) = 5.56631600178024
        assert_relative_eq!(
            critical_x2_constant(),
            0.918_496_472_007_921,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            critical_xp_constant(),
            0.421_817_884_545_499,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            s.x2,
            0.918_496_472_007_921 * 400f64.cbrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            s.xp_sym,
            -0.421_817_884_545_499 * 20f64.cbrt(),
            max_relative = 1e-12
        );
        assert_eq!(s.p2, 0.5);
        assert!((critical_g2_x_only() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn moments_match_closed_forms() {
        let e = eq(20.0, 20.0);
        let s = critical_closed_forms(&e.params);
        assert_relative_eq!(moment(&e, 0, 2).unwrap(), s.x2, max_relative = 1e-8);
        assert_relative_eq!(moment(&e, 1, 1).unwrap(), s.xp_sym, max_relative = 1e-8);
        assert!((moment(&e, 2, 0).unwrap() - 0.5).abs() < 1e-10);
        assert_relative_eq!(moment(&e, 0, 6).unwrap(), 1600.0, max_relative = 1e-8);
        assert!(moment(&e, 1, 0).unwrap().abs() < 1e-12);
        assert!(moment(&e, 9, 0).is_err());
        assert!(moment(&e, 0, 13).is_err());
    }

    #[test]
    fn hermite_moment_closed_forms() {
        let e = eq(17.0, 20.0);
        let c = 1.0 / 80.0;
        let x6 = moment(&e, 0, 6).unwrap();
        let x12 = moment(&e, 0, 12).unwrap();
        let x2 = moment(&e, 0, 2).unwrap();
        let x8 = moment(&e, 0, 8).unwrap();
        assert_relative_eq!(
            moment(&e, 4, 0).unwrap(),
            3.0 / 16.0 + 1.5 * c * c * x6 + c.powi(4) * x12,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            moment(&e, 2, 2).unwrap(),
            x2 / 4.0 + c * c * x8,
            max_relative = 1e-9
        );
    }

    #[test]
    fn boltzmann_reference_values() {
        // independent quadrature of the same weight (python/scipy)
        let cases = [
            (17.0, 9.187_37, Some(1.2553)),
            (20.0, 3.133_77, Some(2.0127)),
            (23.0, 1.061_77, Some(3.011)),
            (30.0, 0.121_70, None),
        ];
        for (d, n, g2) in cases {
            let o = boltzmann_observables(&ModelParams::new(d, 20.0, 1.0).unwrap()).unwrap();
            assert!((o.n - n).abs() < 2e-5 * n.max(1.0), "{d}: {}", o.n);
            if let Some(g2) = g2 {
                assert!((o.g2.unwrap() - g2).abs() < 2e-3, "{d}: {:?}", o.g2);
            }
            assert!(o.moment_identity_residual() < 1e-12);
        }
    }

    #[test]
    fn boltzmann_matches_closed_form_at_criticality() {
        let p = ModelParams::new(20.0, 20.0, 1.0).unwrap();
        let a = boltzmann_observables(&p).unwrap();
        let b = critical_closed_forms(&p);
        assert_relative_eq!(a.x2, b.x2, max_relative = 1e-8);
        assert_relative_eq!(a.p2, b.p2, max_relative = 1e-8);
        assert_relative_eq!(a.xp_sym, b.xp_sym, max_relative = 1e-8);
        let g2 = a.g2.unwrap();
        assert!((1.9..=2.1).contains(&g2), "{g2}");
    }

    #[test]
    fn full_wigner_normalized() {
        let e = eq(17.0, 20.0);
        let l = e.cutoff();
        let inner = |x: f64| {
            let r = e.ridge(x);
            simpson(|p| boltzmann_wigner(&e, x, p), r - 6.0, r + 6.0, 401) / 2.0
        };
        let total = simpson(inner, -l, l, 4001);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    proptest! {
        #[test]
        fn ridge_identity_holds_everywhere(d in 0.0f64..40.0, g in 2.0f64..60.0) {
            let e = EffectiveEquilibrium::new(&ModelParams::new(d, g, 1.0).unwrap()).unwrap();
            let c = 1.0 / (4.0 * g);
            let p2 = moment(&e, 2, 0).unwrap();
            let x6 = moment(&e, 0, 6).unwrap();
            prop_assert!((p2 - (0.25 + c * c * x6)).abs() <= 1e-8 * p2);
        }

        #[test]
        fn rescaling_invariance(s in 0.1f64..10.0) {
            let a = boltzmann_observables(&ModelParams::new(18.0, 20.0, 1.0).unwrap()).unwrap();
            let b = boltzmann_observables(&ModelParams::new(18.0 * s, 20.0 * s, s).unwrap()).unwrap();
            prop_assert!((a.n - b.n).abs() <= 1e-8 * a.n);
            prop_assert!((a.g2.unwrap() - b.g2.unwrap()).abs() <= 1e-8);
        }
    }
}
