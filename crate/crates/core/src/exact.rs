//! Exact steady state from the complex P-representation: closed-form moments as
//! ratios of hypergeometric series, and the exact Wigner function.
//!
//! With `d = delta/eta`, `g = G/eta`, `z = g^2` and the common normalizer
//! `D = 1F2(1/2; 1/2 - i d, 1/2 + i d; z)`:
//!
//! ```text
//! <a^dag a>      = 2 g^2 / (4 d^2 + 1) * 1F2(3/2; 3/2 - i d, 3/2 + i d; z) / D
//! <a^2>          =   g   / (2 d + i)   * 1F2(3/2; 3/2 - i d, 1/2 + i d; z) / D
//! <a^dag2 a^2>   =   g^2 / (4 d^2 + 1) * 2F3(3/2, 3/2; 1/2, 3/2 - i d, 3/2 + i d; z) / D
//! W(x, p)        = (2/pi) |0F1(1/2 - i d; -i (g/2) (x - i p)^2)|^2 exp(-(x^2 + p^2)) / D
//! ```
//!
//! The Wigner function is normalized under the measure `dx dp / 2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Method, ModelParams, ObservableSet};
use crate::quadrature::{simpson_weights, symmetric_nodes};
use crate::semiclassical::semiclassical_photon_number;
use crate::specfun::{hyp0f1, hyp1f2, hyp2f3};

/// Exact steady-state moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactObservables {
    pub n: f64,
    pub a2: Complex64,
    /// `<a^dag^2 a^2>`
    pub a2dag_a2: f64,
    pub g2: Option<f64>,
    pub x2: f64,
    pub p2: f64,
    pub xp_sym: f64,
}

impl ExactObservables {
    pub fn to_observable_set(&self) -> ObservableSet {
        ObservableSet::from_photon_moments(self.n, self.a2, self.g2, Method::Exact)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn normalizer(d: f64, z: f64) -> Result<Complex64> {
    hyp1f2(c(0.5, 0.0), c(0.5, -d), c(0.5, d), c(z, 0.0))
        .map(|r| r.value)
        .map_err(|e| e.context("normalizer 1F2(1/2; 1/2 - id, 1/2 + id; g^2)"))
}

pub fn exact_observables(params: &ModelParams) -> Result<ExactObservables> {
    let d = params.delta_over_eta();
    let g = params.g_over_eta();
    if g == 0.0 {
        return Ok(ExactObservables {
            n: 0.0,
            a2: c(0.0, 0.0),
            a2dag_a2: 0.0,
            g2: None,
            x2: 0.5,
            p2: 0.5,
            xp_sym: 0.0,
        });
    }
    let z = c(g * g, 0.0);
    let den = normalizer(d, g * g)?;
    let prefactor = g * g / (4.0 * d * d + 1.0);

    let n_series = hyp1f2(c(1.5, 0.0), c(1.5, -d), c(1.5, d), z)
        .map_err(|e| e.context("photon number 1F2"))?;
    let n = (2.0 * prefactor * n_series.value / den).re;

    let a2_series = hyp1f2(c(1.5, 0.0), c(1.5, -d), c(0.5, d), z)
        .map_err(|e| e.context("anomalous average 1F2"))?;
    let a2 = g / c(2.0 * d, 1.0) * a2_series.value / den;

    let f_series = hyp2f3(
        c(1.5, 0.0),
        c(1.5, 0.0),
        c(0.5, 0.0),
        c(1.5, -d),
        c(1.5, d),
        z,
    )
    .map_err(|e| e.context("fourth-order correlator 2F3"))?;
    let a2dag_a2 = (prefactor * f_series.value / den).re;

    if !n.is_finite() || !a2.re.is_finite() || !a2.im.is_finite() || !a2dag_a2.is_finite() {
        return Err(Error::NonFinite("exact observables"));
    }
    let g2 = (n > 0.0).then(|| a2dag_a2 / (n * n));
    Ok(ExactObservables {
        n,
        a2,
        a2dag_a2,
        g2,
        x2: n + a2.re + 0.5,
        p2: n - a2.re + 0.5,
        xp_sym: a2.im,
    })
}

/// The exact Wigner function with its normalizer precomputed.
#[derive(Debug, Clone, Copy)]
pub struct ExactWigner {
    params: ModelParams,
    log_normalizer: f64,
}

impl ExactWigner {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let d = params.delta_over_eta();
        let g = params.g_over_eta();
        let den = normalizer(d, g * g)?;
        if !(den.re > 0.0) {
            return Err(Error::NonFinite("Wigner normalizer"));
        }
        Ok(Self {
            params: *params,
            log_normalizer: den.re.ln(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn eval(&self, x: f64, p: f64) -> Result<f64> {
        if !x.is_finite() || !p.is_finite() {
            return Err(Error::NonFinite("Wigner argument"));
        }
        let d = self.params.delta_over_eta();
        let g = self.params.g_over_eta();
        let w = c(x, -p);
        let arg = c(0.0, -0.5 * g) * w * w;
        let f = hyp0f1(c(0.5, -d), arg)
            .map_err(|e| e.context(format!("0F1 at (x, p) = ({x}, {p})")))?
            .value;
        let mag = f.norm();
        if mag == 0.0 {
            return Ok(0.0);
        }
        let log_w = (2.0 / PI).ln() + 2.0 * mag.ln() - (x * x + p * p) - self.log_normalizer;
        Ok(log_w.exp())
    }

    /// `integral dp/2 W(x, p)` by composite Simpson on `[-half_width, half_width]`.
    pub fn reduced(&self, x: f64, half_width: f64, nodes: usize) -> Result<ReducedWignerValue> {
        let ps = symmetric_nodes(half_width, nodes);
        let h = ps[1] - ps[0];
        let vals = ps
            .iter()
            .map(|&p| self.eval(x, p))
            .collect::<Result<Vec<_>>>()?;
        let fine: f64 = simpson_weights(nodes, h)
            .iter()
            .zip(&vals)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            * 0.5;
        // Same rule on every other node, for a Richardson-style error estimate.
        let coarse_n = (nodes - 1) / 2 + 1;
        let error_estimate = if coarse_n >= 3 && coarse_n % 2 == 1 {
            let coarse: f64 = simpson_weights(coarse_n, 2.0 * h)
                .iter()
                .zip(vals.iter().step_by(2))
                .map(|(w, v)| w * v)
                .sum::<f64>()
                * 0.5;
            (fine - coarse).abs() / 15.0
        } else {
            f64::NAN
        };
        Ok(ReducedWignerValue {
            value: fine,
            error_estimate,
        })
    }
}

/// Reduced Wigner density at one `x`, with quadrature error metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedWignerValue {
    pub value: f64,
    pub error_estimate: f64,
}

pub fn exact_wigner(params: &ModelParams, x: f64, p: f64) -> Result<f64> {
    ExactWigner::new(params)?.eval(x, p)
}

/// Quadrature extent used for phase-space integrals of the exact state:
/// `(half_width, nodes per axis)`.
///
/// The half-width is the larger of `max(4, 1.5 sqrt(2 n_s + 1))` and
/// `6.5 sqrt(max(<x^2>, <p^2>))`; the second term matters at and above
/// threshold where `n_s = 0` but fluctuations are large. Spacing is capped at
/// 0.1 and never fewer than 257 nodes are used.
pub fn phase_space_extent(params: &ModelParams) -> Result<(f64, usize)> {
    let n_s = semiclassical_photon_number(&params.normalized());
    let obs = exact_observables(params)?;
    Ok(extent_from_moments(n_s, obs.x2, obs.p2))
}

pub(crate) fn extent_from_moments(n_s: f64, x2: f64, p2: f64) -> (f64, usize) {
    let half_width = 4f64
        .max(1.5 * (2.0 * n_s + 1.0).sqrt())
        .max(6.5 * x2.max(p2).sqrt());
    let mut nodes = ((2.0 * half_width / 0.1).ceil() as usize + 1).max(257);
    if nodes % 2 == 0 {
        nodes += 1;
    }
    (half_width, nodes)
}

/// Reduced Wigner function `integral dp/2 W(x, p)` of the exact state.
pub fn exact_reduced_wigner(params: &ModelParams, x: f64) -> Result<ReducedWignerValue> {
    let (half_width, nodes) = phase_space_extent(params)?;
    ExactWigner::new(params)?.reduced(x, half_width, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(d: f64, g: f64) -> ModelParams {
        ModelParams::new(d, g, 1.0).unwrap()
    }

    #[test]
    fn vacuum_when_unpumped() {
        for d in [0.0, 3.0, 40.0] {
            let o = exact_observables(&params(d, 0.0)).unwrap();
            assert_eq!(o.n, 0.0);
            assert_eq!(o.a2, c(0.0, 0.0));
            assert_eq!(o.g2, None);
        }
    }

    #[test]
    fn zero_detuning_closed_forms() {
        // d = 0: n = g tanh(2g), <a^2> = -i g
        let g = 0.5;
        let o = exact_observables(&params(0.0, g)).unwrap();
        assert_relative_eq!(o.n, g * (2.0 * g).tanh(), max_relative = 1e-13);
        assert!((o.a2 - c(0.0, -g)).norm() < 1e-14);
    }

    #[test]
    fn brute_force_lindblad_reference() {
        // Steady state of the master equation on an 50-level Fock basis with
        // a 1e-6 one-photon loss selecting the physical parity mixture.
        let cases = [
            (1.0, 2.0, 1.505_97, c(0.752_99, -1.373_48), 2.746_97),
            (3.0, 2.0, 0.294_12, c(0.441_19, -0.159_56), 0.319_11),
            (6.0, 6.0, 1.469_10, c(1.469_10, -0.733_15), 4.398_91),
        ];
        for (d, g, n, a2, f) in cases {
            let o = exact_observables(&params(d, g)).unwrap();
            assert!((o.n - n).abs() < 2e-5, "{d} {g}: n {}", o.n);
            assert!((o.a2 - a2).norm() < 3e-5, "{d} {g}: a2 {}", o.a2);
            assert!((o.a2dag_a2 - f).abs() < 3e-5, "{d} {g}: f {}", o.a2dag_a2);
        }
        let big = [
            (
                30.0,
                20.0,
                0.396_209_520,
                c(0.594_314_280, -0.033_002_509),
                4.204_622_48,
            ),
            (
                23.0,
                20.0,
                1.314_762_048,
                c(1.511_976_355, -0.253_991_737),
                2.938_699_70,
            ),
        ];
        for (d, g, n, a2, g2) in big {
            let o = exact_observables(&params(d, g)).unwrap();
            assert!((o.n - n).abs() < 1e-7 * n);
            assert!((o.a2 - a2).norm() < 1e-7);
            assert!((o.g2.unwrap() - g2).abs() < 1e-7 * g2);
        }
    }

    #[test]
    fn moment_identities() {
        let o = exact_observables(&params(17.0, 20.0)).unwrap();
        let s = o.to_observable_set();
        assert!(s.moment_identity_residual() < 1e-12);
        assert_eq!(s.method, Method::Exact);
        assert!(o.n > 0.0 && o.a2dag_a2 > 0.0);
    }

    #[test]
    fn critical_point_p_variance_is_half() {
        // n = Re <a^2> exactly at delta = G, so <p^2> = 1/2 at every size
        for g in [5.0, 20.0, 100.0] {
            let o = exact_observables(&params(g, g)).unwrap();
            assert!((o.p2 - 0.5).abs() < 1e-10 * o.n, "{g}: {}", o.p2);
        }
    }

    #[test]
    fn g2_limits() {
        let g2 = |d| exact_observables(&params(d, 20.0)).unwrap().g2.unwrap();
        assert!((g2(5.0) - 1.0).abs() < 0.05);
        assert!((g2(20.0) - 2.0).abs() < 0.05);
        assert!(g2(26.0) > 2.7);
    }

    #[test]
    fn vacuum_wigner() {
        let p = params(0.0, 0.0);
        for (x, q) in [(0.0, 0.0), (1.0, -0.5), (2.5, 1.5)] {
            let w = exact_wigner(&p, x, q).unwrap();
            assert_relative_eq!(
                w,
                2.0 / PI * (-(x * x + q * q) as f64).exp(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn vacuum_reduced_wigner() {
        let p = params(0.0, 0.0);
        for x in [0.0, 0.7, 2.0] {
            let r = exact_reduced_wigner(&p, x).unwrap();
            assert_relative_eq!(
                r.value,
                (-x * x as f64).exp() / PI.sqrt(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn reduced_wigner_is_even() {
        let p = params(20.0, 20.0);
        for x in [0.3, 1.7, 3.1] {
            let a = exact_reduced_wigner(&p, x).unwrap().value;
            let b = exact_reduced_wigner(&p, -x).unwrap().value;
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn wigner_is_non_negative_and_even() {
        let w = ExactWigner::new(&params(17.0, 20.0)).unwrap();
        for &(x, p) in &[(4.4, -1.3), (0.0, 0.0), (-2.0, 3.0), (7.0, 7.0)] {
            let a = w.eval(x, p).unwrap();
            let b = w.eval(-x, -p).unwrap();
            assert!(a >= 0.0);
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }
}
