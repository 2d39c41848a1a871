//! Cross-validation suite: named pass/fail checks comparing the independent
//! routes against each other and against closed forms.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::criticality::{fit_exponent, verify_reduced_model_scaling, SignHandling};
use crate::equilibrium::{
    boltzmann_observables, boltzmann_wigner, critical_closed_forms, critical_g2_x_only, moment,
    reduced_wigner, EffectiveEquilibrium,
};
use crate::error::Result;
use crate::exact::{exact_observables, phase_space_extent, ExactWigner};
use crate::langevin::{
    ito_drift, ito_stratonovich_drift_correction, run_ensemble_detailed, stratonovich_drift,
    MomentEstimate, NoiseSource, Scheme, TrajectoryConfig,
};
use crate::model::{ComplexAmplitude, Method, ModelParams};
use crate::quadrature::simpson;
use crate::semiclassical::{drift, steady_states};
use crate::specfun::{complex_gamma, hyp0f1};
use crate::wigner::WignerGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, r: Result<CheckResult>) -> Self {
        r.unwrap_or_else(|e| CheckResult::new(name, false, format!("error: {e}")))
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn params(d: f64, g: f64) -> ModelParams {
    ModelParams::new(d, g, 1.0).expect("literal parameters are valid")
}

/// Detunings probed at `G/eta = 20`.
pub const PROBE_DETUNINGS: [f64; 3] = [17.0, 20.0, 23.0];
pub const PROBE_G: f64 = 20.0;

/// Closed forms at `delta = G = 20` against the Hermite-moment quadrature.
pub fn critical_moments() -> Vec<CheckResult> {
    let p = params(PROBE_G, PROBE_G);
    let closed = critical_closed_forms(&p);
    let mut out = vec![CheckResult::new(
        "closed-form p2",
        (closed.p2 - 0.5).abs() <= 1e-12,
        format!("p2 = {:.17e}", closed.p2),
    )];
    let eq = match EffectiveEquilibrium::new(&p) {
        Ok(eq) => eq,
        Err(e) => {
            out.push(CheckResult::new("equilibrium setup", false, e.to_string()));
            return out;
        }
    };
    for (name, k, m, target) in [
        ("x2", 0, 2, closed.x2),
        ("p2", 2, 0, closed.p2),
        ("xp", 1, 1, closed.xp_sym),
    ] {
        out.push(CheckResult::from_result(
            name,
            moment(&eq, k, m).map(|v| {
                let r = rel(v, target);
                CheckResult::new(
                    format!("quadrature {name} vs closed form"),
                    r <= 1e-8,
                    format!("{v:.12} vs {target:.12}, rel {r:.2e} (tol 1e-8)"),
                )
            }),
        ));
    }
    out
}

pub const EXPONENT_GRID: [f64; 7] = [20.0, 30.0, 40.0, 55.0, 70.0, 85.0, 100.0];

/// Log-log slopes of the exact observables at `delta = G`.
pub fn exact_exponents() -> Vec<CheckResult> {
    type Obs = fn(&ModelParams) -> Result<f64>;
    let cases: [(&str, Obs, SignHandling, f64, f64); 4] = [
        (
            "x2",
            |p| Ok(exact_observables(p)?.x2),
            SignHandling::AsIs,
            2.0 / 3.0,
            0.02,
        ),
        (
            "n",
            |p| Ok(exact_observables(p)?.n),
            SignHandling::AsIs,
            2.0 / 3.0,
            0.02,
        ),
        (
            "Re a2",
            |p| Ok(exact_observables(p)?.a2.re),
            SignHandling::AsIs,
            2.0 / 3.0,
            0.02,
        ),
        (
            "-Im a2",
            |p| Ok(exact_observables(p)?.a2.im),
            SignHandling::Negate,
            1.0 / 3.0,
            0.03,
        ),
    ];
    cases
        .iter()
        .map(|(name, f, sign, target, tol)| {
            let name = format!("slope {name}");
            CheckResult::from_result(
                &name,
                fit_exponent(f, &EXPONENT_GRID, *sign).map(|fit| {
                    CheckResult::new(
                        &name,
                        (fit.slope - target).abs() <= *tol,
                        format!(
                            "{:.4} (target {:.3} +- {tol}, r2 {:.6})",
                            fit.slope, target, fit.r_squared
                        ),
                    )
                }),
            )
        })
        .collect()
}

/// Exact `g2` in the three regimes and the critical x-only ratio.
pub fn g2_regimes() -> Vec<CheckResult> {
    let mut out: Vec<CheckResult> = [(10.0, 1.0, 1.2), (20.0, 1.8, 2.2), (30.0, 2.7, 3.3)]
        .iter()
        .map(|&(d, lo, hi)| {
            let name = format!("exact g2 at delta/eta = {d}");
            CheckResult::from_result(
                &name,
                exact_observables(&params(d, PROBE_G)).map(|o| {
                    let g2 = o.g2.unwrap_or(f64::NAN);
                    CheckResult::new(
                        &name,
                        (lo..=hi).contains(&g2),
                        format!("{g2:.6} in [{lo}, {hi}]"),
                    )
                }),
            )
        })
        .collect();
    let r = critical_g2_x_only();
    out.push(CheckResult::new(
        "x-only g2 at criticality",
        (r - 2.0).abs() <= 1e-10,
        format!("{r:.15}"),
    ));
    out
}

/// The acceptance configuration: library defaults with a fixed seed.
pub fn default_mc_config() -> TrajectoryConfig {
    TrajectoryConfig {
        seed: 20_240_601,
        ..TrajectoryConfig::default()
    }
}

/// Langevin ensemble against the exact moments.
pub fn langevin_vs_exact(config: &TrajectoryConfig) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for d in PROBE_DETUNINGS {
        let p = params(d, PROBE_G);
        let run =
            run_ensemble_detailed(&p, config, false).and_then(|r| Ok((r, exact_observables(&p)?)));
        let (r, ex) = match run {
            Ok(v) => v,
            Err(e) => {
                out.push(CheckResult::new(
                    format!("langevin at delta/eta = {d}"),
                    false,
                    e.to_string(),
                ));
                continue;
            }
        };
        let o = r.observables;
        let err = o.errors.expect("langevin sets carry errors");
        for (name, mc, se, exact) in [
            ("n", o.n, err.n, ex.n),
            ("Re a2", o.a2.re, err.re_a2, ex.a2.re),
            ("Im a2", o.a2.im, err.im_a2, ex.a2.im),
        ] {
            let tol = (3.0 * se).max(0.03 * exact.abs());
            out.push(CheckResult::new(
                format!("{name} at delta/eta = {d}"),
                (mc - exact).abs() <= tol,
                format!(
                    "langevin {mc:.5} +- {se:.5}, exact {exact:.5}, |diff| {:.5} (tol {tol:.5})",
                    (mc - exact).abs()
                ),
            ));
        }
    }
    out
}

fn agree(a: &MomentEstimate, b: &MomentEstimate) -> (bool, f64, f64) {
    let diff = (a.mean - b.mean).abs();
    let tol = 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    (diff <= tol, diff, tol)
}

/// Ito and Stratonovich ensembles agree; drifts differ by `-eta alpha`.
pub fn ito_vs_stratonovich(config: &TrajectoryConfig) -> Vec<CheckResult> {
    let mut out = vec![drift_correction_check()];
    for d in PROBE_DETUNINGS {
        let p = params(d, PROBE_G);
        let ito = TrajectoryConfig {
            scheme: Scheme::ItoEulerMaruyama,
            ..*config
        };
        let strat = TrajectoryConfig {
            scheme: Scheme::StratonovichHeun,
            ..*config
        };
        let pair = run_ensemble_detailed(&p, &ito, false)
            .and_then(|a| Ok((a, run_ensemble_detailed(&p, &strat, false)?)));
        let (a, b) = match pair {
            Ok(v) => v,
            Err(e) => {
                out.push(CheckResult::new(
                    format!("schemes at delta/eta = {d}"),
                    false,
                    e.to_string(),
                ));
                continue;
            }
        };
        let (ma, mb) = (a.moments, b.moments);
        for (name, x, y) in [
            ("x", ma.x, mb.x),
            ("p", ma.p, mb.p),
            ("x2", ma.x2, mb.x2),
            ("p2", ma.p2, mb.p2),
            ("xp", ma.xp, mb.xp),
        ] {
            let (ok, diff, tol) = agree(&x, &y);
            out.push(CheckResult::new(
                format!("ito vs stratonovich {name} at delta/eta = {d}"),
                ok,
                format!(
                    "{:.5} vs {:.5}, |diff| {diff:.5} (tol {tol:.5})",
                    x.mean, y.mean
                ),
            ));
        }
    }
    out
}

fn drift_correction_check() -> CheckResult {
    let mut src = NoiseSource::new(7, 0, 1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut u = || src.standard_normal();
        let p = match ModelParams::new(20.0 * u().abs(), 20.0 * u().abs(), 0.1 + u().abs()) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let a = ComplexAmplitude::new(5.0 * u(), 5.0 * u());
        let diff = Complex64::from(stratonovich_drift(&p, a)) - Complex64::from(ito_drift(&p, a));
        let corr = Complex64::from(ito_stratonovich_drift_correction(&p, a));
        let scale = 1.0 + Complex64::from(ito_drift(&p, a)).norm();
        worst = worst.max((diff - corr).norm() / (f64::EPSILON * scale));
    }
    CheckResult::new(
        "drift difference equals -eta alpha",
        worst <= 4.0,
        format!("worst residual {worst:.2} ulp of drift scale"),
    )
}

/// `integral |w_exact - w_boltzmann| dx` on the exact state's extent.
pub fn reduced_wigner_l1(p: &ModelParams) -> Result<f64> {
    let (half_width, nodes) = phase_space_extent(p)?;
    let w = ExactWigner::new(p)?;
    let eq = EffectiveEquilibrium::new(p)?;
    let n = 801;
    let xs: Vec<f64> = (0..n)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
        .collect();
    let mut diffs = Vec::with_capacity(n);
    for &x in &xs {
        let e = w.reduced(x, half_width, nodes)?.value;
        diffs.push((e - reduced_wigner(&eq, x)).abs());
    }
    let h = xs[1] - xs[0];
    Ok(crate::quadrature::simpson_weights(n, h)
        .iter()
        .zip(&diffs)
        .map(|(w, d)| w * d)
        .sum())
}

pub fn reduced_wigner_agreement() -> Vec<CheckResult> {
    PROBE_DETUNINGS
        .iter()
        .map(|&d| {
            let name = format!("reduced Wigner L1 at delta/eta = {d}");
            CheckResult::from_result(
                &name,
                reduced_wigner_l1(&params(d, PROBE_G))
                    .map(|l1| CheckResult::new(&name, l1 <= 0.1, format!("{l1:.4} (tol 0.1)"))),
            )
        })
        .collect()
}

/// Reduced critical dynamics under `eta -> eta / 8`.
pub fn scaling_ansatz(config: &TrajectoryConfig) -> Vec<CheckResult> {
    let p = params(PROBE_G, PROBE_G);
    let r = match verify_reduced_model_scaling(&p, &[1.0, 8.0], config) {
        Ok(r) => r,
        Err(e) => {
            return vec![CheckResult::new(
                "reduced-model scaling",
                false,
                e.to_string(),
            )]
        }
    };
    let (_, rx, px, tx) = r.x2_ratios[0];
    let (_, rp, pp, tp) = r.p2_ratios[0];
    vec![
        CheckResult::new(
            "x2 ratio N=8",
            (rx - px).abs() <= tx,
            format!("{rx:.4} vs {px} (tol {tx:.4})"),
        ),
        CheckResult::new(
            "p2 ratio N=8",
            (rp - pp).abs() <= tp,
            format!("{rp:.4} vs {pp} (tol {tp:.4})"),
        ),
        CheckResult::new(
            "nu",
            (r.exponents.nu - 1.0 / 3.0).abs() <= 0.03,
            format!("{:.4} (target 1/3 +- 0.03)", r.exponents.nu),
        ),
        CheckResult::new(
            "mu",
            r.exponents.mu.abs() <= 0.03,
            format!("{:.4} (target 0 +- 0.03)", r.exponents.mu),
        ),
        CheckResult::new(
            "epsilon from tau vs nu - mu",
            r.epsilon_consistent(0.05),
            format!(
                "fitted {:.4}, nu - mu {:.4}, tau {:.4} -> {:.4} (tol 0.05)",
                r.epsilon_fitted, r.exponents.epsilon, r.points[0].tau, r.points[1].tau
            ),
        ),
    ]
}

/// Normalizations, moment identities and special-function identities; no
/// Monte Carlo.
pub fn invariant_suite() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.extend(specfun_identities());
    out.extend(mean_field_checks());
    for d in PROBE_DETUNINGS {
        out.extend(exact_state_checks(d));
        out.extend(equilibrium_checks(d));
    }
    out
}

fn specfun_identities() -> Vec<CheckResult> {
    let mut worst_cosh: f64 = 0.0;
    let mut worst_sinh: f64 = 0.0;
    // Arguments z^2/4 up to modulus 2500. Directions where cosh z is
    // exponentially smaller than cosh |z| lose digits to cancellation and are
    // excluded.
    for &z in &[
        Complex64::new(2.0, 0.0),
        Complex64::new(50.0, 0.0),
        Complex64::new(99.9, 0.0),
        Complex64::new(10.0, 5.0),
        Complex64::new(-30.0, 8.0),
        Complex64::new(60.0, -6.0),
        Complex64::new(-95.0, 15.0),
    ] {
        let arg = z * z / 4.0;
        if let (Ok(c), Ok(s)) = (
            hyp0f1(Complex64::new(0.5, 0.0), arg),
            hyp0f1(Complex64::new(1.5, 0.0), arg),
        ) {
            worst_cosh = worst_cosh.max((c.value - z.cosh()).norm() / z.cosh().norm());
            worst_sinh = worst_sinh.max((s.value - z.sinh() / z).norm() / (z.sinh() / z).norm());
        } else {
            worst_cosh = f64::INFINITY;
        }
    }
    let mut worst_refl: f64 = 0.0;
    for &z in &[
        Complex64::new(0.3, 0.0),
        Complex64::new(1.0 / 6.0, 0.0),
        Complex64::new(0.5, 20.0),
        Complex64::new(-2.7, 1.5),
        Complex64::new(3.3, -0.4),
    ] {
        let lhs =
            complex_gamma(z).and_then(|a| Ok(a * complex_gamma(Complex64::new(1.0, 0.0) - z)?));
        let rhs = PI / (PI * z).sin();
        worst_refl = worst_refl.max(lhs.map_or(f64::INFINITY, |l| (l - rhs).norm() / rhs.norm()));
    }
    vec![
        CheckResult::new(
            "0F1(1/2; z^2/4) = cosh z",
            worst_cosh <= 1e-10,
            format!("worst rel {worst_cosh:.2e}"),
        ),
        CheckResult::new(
            "0F1(3/2; z^2/4) = sinh z / z",
            worst_sinh <= 1e-10,
            format!("worst rel {worst_sinh:.2e}"),
        ),
        CheckResult::new(
            "Gamma(z) Gamma(1 - z) = pi / sin(pi z)",
            worst_refl <= 1e-10,
            format!("worst rel {worst_refl:.2e}"),
        ),
    ]
}

fn mean_field_checks() -> Vec<CheckResult> {
    let mut worst: f64 = 0.0;
    for d in [0.0, 10.0, 17.0, 19.9] {
        let p = params(d, PROBE_G);
        for b in steady_states(&p) {
            let r = drift(&p, b.amplitude());
            worst = worst.max(r.norm_sqr().sqrt());
        }
    }
    vec![CheckResult::new(
        "mean-field branches are stationary",
        worst <= 1e-10,
        format!("worst |drift| {worst:.2e}"),
    )]
}

fn exact_state_checks(d: f64) -> Vec<CheckResult> {
    let p = params(d, PROBE_G);
    let tag = format!("delta/eta = {d}");
    let mut out = Vec::new();
    let obs = match exact_observables(&p) {
        Ok(o) => o,
        Err(e) => {
            return vec![CheckResult::new(
                format!("exact observables at {tag}"),
                false,
                e.to_string(),
            )]
        }
    };
    let set = obs.to_observable_set();
    out.push(CheckResult::new(
        format!("exact moment identities at {tag}"),
        set.moment_identity_residual() <= 1e-12,
        format!("residual {:.2e}", set.moment_identity_residual()),
    ));
    let grid =
        phase_space_extent(&p).and_then(|(l, n)| WignerGrid::sample(Method::Exact, &p, l, n));
    match grid {
        Ok(g) => {
            let norm = g.normalization();
            out.push(CheckResult::new(
                format!("exact Wigner normalization at {tag}"),
                (norm - 1.0).abs() <= 1e-6,
                format!("{norm:.10} (tol 1e-6)"),
            ));
            let x2 = g.integrate(|x, _| x * x);
            out.push(CheckResult::new(
                format!("exact Wigner x2 vs closed form at {tag}"),
                rel(x2, obs.x2) <= 1e-3,
                format!("{x2:.6} vs {:.6} (rel tol 1e-3)", obs.x2),
            ));
            let odd = g.integrate(|x, _| x).abs().max(g.integrate(|_, q| q).abs());
            out.push(CheckResult::new(
                format!("exact Wigner odd moments at {tag}"),
                odd <= 1e-6,
                format!("max |<x>|, |<p>| = {odd:.2e}"),
            ));
            // The same state on a coarse grid.
            let coarse = WignerGrid::sample(Method::Exact, &p, g.x_axis[g.x_axis.len() - 1], 161)
                .map(|c| c.normalization());
            out.push(CheckResult::from_result(
                "coarse exact grid",
                coarse.map(|c| {
                    CheckResult::new(
                        format!("coarse exact grid normalization at {tag}"),
                        (c - 1.0).abs() <= 1e-3,
                        format!("{c:.8} (tol 1e-3)"),
                    )
                }),
            ));
            let w = ExactWigner::new(&p);
            let (l, n) = (g.x_axis[g.x_axis.len() - 1], g.x_axis.len());
            let reduced_total = w.and_then(|w| {
                let vals = g
                    .x_axis
                    .iter()
                    .map(|&x| Ok(w.reduced(x, l, n)?.value))
                    .collect::<Result<Vec<_>>>()?;
                let h = g.x_axis[1] - g.x_axis[0];
                Ok(crate::quadrature::simpson_weights(n, h)
                    .iter()
                    .zip(&vals)
                    .map(|(a, b)| a * b)
                    .sum::<f64>())
            });
            out.push(CheckResult::from_result(
                "exact reduced Wigner",
                reduced_total.map(|t| {
                    CheckResult::new(
                        format!("exact reduced Wigner normalization at {tag}"),
                        (t - 1.0).abs() <= 1e-5,
                        format!("{t:.10} (tol 1e-5)"),
                    )
                }),
            ));
        }
        Err(e) => out.push(CheckResult::new(
            format!("exact Wigner grid at {tag}"),
            false,
            e.to_string(),
        )),
    }
    out
}

fn equilibrium_checks(d: f64) -> Vec<CheckResult> {
    let p = params(d, PROBE_G);
    let tag = format!("delta/eta = {d}");
    let eq = match EffectiveEquilibrium::new(&p) {
        Ok(eq) => eq,
        Err(e) => {
            return vec![CheckResult::new(
                format!("equilibrium at {tag}"),
                false,
                e.to_string(),
            )]
        }
    };
    let mut out = Vec::new();
    let l = eq.cutoff();
    let z = simpson(|x| reduced_wigner(&eq, x), -l, l, 20001);
    out.push(CheckResult::new(
        format!("Boltzmann reduced normalization at {tag}"),
        (z - 1.0).abs() <= 1e-8,
        format!("{z:.12} (tol 1e-8)"),
    ));
    let full = simpson(
        |x| {
            let r = eq.ridge(x);
            0.5 * simpson(|q| boltzmann_wigner(&eq, x, q), r - 6.0, r + 6.0, 401)
        },
        -l,
        l,
        4001,
    );
    out.push(CheckResult::new(
        format!("Boltzmann Wigner normalization at {tag}"),
        (full - 1.0).abs() <= 1e-6,
        format!("{full:.10} (tol 1e-6)"),
    ));
    let c = p.eta() / (4.0 * p.g());
    let ridge = moment(&eq, 2, 0).and_then(|p2| Ok((p2, moment(&eq, 0, 6)?)));
    out.push(CheckResult::from_result(
        "ridge identity",
        ridge.map(|(p2, x6)| {
            let target = 0.25 + c * c * x6;
            CheckResult::new(
                format!("<p^2> = 1/4 + (eta/4G)^2 <x^6> at {tag}"),
                rel(p2, target) <= 1e-8,
                format!("{p2:.12} vs {target:.12}"),
            )
        }),
    ));
    out.push(CheckResult::from_result(
        "Boltzmann observables",
        boltzmann_observables(&p).and_then(|s| {
            let grid = WignerGrid::sample(Method::Boltzmann, &p, l.max(6.0), 321)?;
            let norm = grid.normalization();
            Ok(CheckResult::new(
                format!("Boltzmann moment identities and coarse grid at {tag}"),
                s.moment_identity_residual() <= 1e-12 && (norm - 1.0).abs() <= 1e-3,
                format!(
                    "identity residual {:.2e}, coarse normalization {norm:.8}",
                    s.moment_identity_residual()
                ),
            ))
        }),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_format() {
        let c = CheckResult::new("a", true, "b");
        assert_eq!(c.to_string(), "PASS a: b");
        assert!(!all_passed(&[c, CheckResult::new("x", false, "")]));
    }

    #[test]
    fn invariants_pass_and_are_reproducible() {
        let a = invariant_suite();
        for r in &a {
            assert!(r.passed, "{r}");
        }
        assert_eq!(a, invariant_suite());
    }
}
