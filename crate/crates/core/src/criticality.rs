//! Power-law fits at the critical point `delta = G` and the `eta -> eta / N`
//! scaling check of the reduced critical dynamics.

use crate::error::{Error, Result};
use crate::langevin::{
    integrated_autocorrelation_time, run_ensemble_detailed, MomentEstimate, SystemKind,
    TrajectoryConfig,
};
use crate::model::ModelParams;

/// Critical exponents of x, p and time under `eta -> eta / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingExponents {
    pub nu: f64,
    pub mu: f64,
    pub epsilon: f64,
}

impl ScalingExponents {
    /// Builds the triple with `epsilon = nu - mu` imposed.
    pub fn from_nu_mu(nu: f64, mu: f64) -> Self {
        Self {
            nu,
            mu,
            epsilon: nu - mu,
        }
    }

    /// `(1/3, 0, 1/3)`
    pub fn mean_field() -> Self {
        Self::from_nu_mu(1.0 / 3.0, 0.0)
    }

    pub fn is_consistent(&self) -> bool {
        self.epsilon == self.nu - self.mu
    }
}

/// Ordinary least-squares line through log-log points.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln(G/eta), ln(observable))`
    pub points: Vec<(f64, f64)>,
}

pub const MIN_FIT_POINTS: usize = 5;

/// Least-squares line `y = slope * x + intercept`. Needs two distinct `x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<ExponentFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit(format!(
            "length mismatch: {} x values, {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fit data"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        points: xs.iter().copied().zip(ys.iter().copied()).collect(),
    })
}

/// `eta -> eta / n_scale` with `delta`, `G` unchanged.
pub fn scale_params(params: &ModelParams, n_scale: f64) -> Result<ModelParams> {
    if !(n_scale > 0.0) || !n_scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be positive and finite, got {n_scale}"
        )));
    }
    params.with_eta(params.eta() / n_scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignHandling {
    AsIs,
    /// For observables negative at criticality (`Im <a^2>`, `xp_sym`).
    Negate,
}

/// Fits `ln(sign * f(G/eta))` against `ln(G/eta)`; `f` is evaluated at
/// `delta = G`, `eta = 1`.
pub fn fit_exponent<F>(
    observable_fn: F,
    g_over_eta_values: &[f64],
    sign_handling: SignHandling,
) -> Result<ExponentFit>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    if g_over_eta_values.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_FIT_POINTS} points, got {}",
            g_over_eta_values.len()
        )));
    }
    let mut xs = Vec::with_capacity(g_over_eta_values.len());
    let mut ys = Vec::with_capacity(g_over_eta_values.len());
    for &g in g_over_eta_values {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::Fit(format!("G/eta must be positive, got {g}")));
        }
        let params = ModelParams::new(g, g, 1.0)?;
        let raw = observable_fn(&params).map_err(|e| e.context(format!("G/eta = {g}")))?;
        let v = match sign_handling {
            SignHandling::AsIs => raw,
            SignHandling::Negate => -raw,
        };
        if !(v > 0.0) {
            return Err(Error::Fit(format!(
                "observable {v} at G/eta = {g} is not positive after sign handling"
            )));
        }
        xs.push(g.ln());
        ys.push(v.ln());
    }
    ols(&xs, &ys)
}

/// Reduced critical ensemble at one scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n_scale: f64,
    pub x2: MomentEstimate,
    pub p2: MomentEstimate,
    /// Integrated autocorrelation time of `x^2`.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Fitted `(nu, mu)` with `epsilon = nu - mu` imposed.
    pub exponents: ScalingExponents,
    /// Slope of `ln tau` against `ln N`.
    pub epsilon_fitted: f64,
    /// `(N, ratio, predicted, tolerance)` of `<x^2>_N / <x^2>_1` with
    /// tolerance three combined standard errors.
    pub x2_ratios: Vec<(f64, f64, f64, f64)>,
    pub p2_ratios: Vec<(f64, f64, f64, f64)>,
}

impl ScalingReport {
    pub fn ratios_consistent(&self) -> bool {
        self.x2_ratios
            .iter()
            .chain(&self.p2_ratios)
            .all(|(_, r, pred, tol)| (r - pred).abs() <= *tol)
    }

    pub fn exponents_within(&self, tol_nu: f64, tol_mu: f64) -> bool {
        (self.exponents.nu - 1.0 / 3.0).abs() <= tol_nu && self.exponents.mu.abs() <= tol_mu
    }

    pub fn epsilon_consistent(&self, tol: f64) -> bool {
        (self.epsilon_fitted - self.exponents.epsilon).abs() <= tol
    }
}

fn ratio_with_error(a: &MomentEstimate, b: &MomentEstimate) -> (f64, f64) {
    let r = b.mean / a.mean;
    let rel = ((a.std_error / a.mean).powi(2) + (b.std_error / b.mean).powi(2)).sqrt();
    (r, r * rel)
}

/// Runs the reduced critical dynamics at `eta / N` for each `N` (the first
/// entry is the reference) and fits the exponents. The step size stays fixed
/// while burn-in and sampling windows stretch by `N^(1/3)`, the expected
/// slowing down.
pub fn verify_reduced_model_scaling(
    params: &ModelParams,
    n_scale_list: &[f64],
    base_config: &TrajectoryConfig,
) -> Result<ScalingReport> {
    if (params.delta() - params.g()).abs() > 1e-12 * params.g().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling check needs delta = G, got delta = {}, G = {}",
            params.delta(),
            params.g()
        )));
    }
    if n_scale_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two scale factors".into(),
        ));
    }
    let mut points = Vec::with_capacity(n_scale_list.len());
    for &n in n_scale_list {
        let scaled = scale_params(params, n)?;
        let stretch = n.cbrt();
        let config = TrajectoryConfig {
            t_burn: base_config.t_burn * stretch,
            t_sample: base_config.t_sample * stretch,
            system: SystemKind::ReducedCritical,
            ..*base_config
        };
        let r = run_ensemble_detailed(&scaled, &config, true)
            .map_err(|e| e.context(format!("reduced ensemble at N = {n}")))?;
        let rho = r
            .x2_autocorrelation
            .ok_or(Error::Fit("no autocorrelation recorded".into()))?;
        let tau = integrated_autocorrelation_time(&rho, config.sample_interval())?;
        points.push(ScalingPoint {
            n_scale: n,
            x2: r.moments.x2,
            p2: r.moments.p2,
            tau,
        });
    }
    let base = points[0];
    let mut x2_ratios = Vec::new();
    let mut p2_ratios = Vec::new();
    for pt in &points[1..] {
        let (rx, ex) = ratio_with_error(&base.x2, &pt.x2);
        let (rp, ep) = ratio_with_error(&base.p2, &pt.p2);
        let predicted = (pt.n_scale / base.n_scale).powf(2.0 / 3.0);
        x2_ratios.push((pt.n_scale, rx, predicted, 3.0 * ex));
        p2_ratios.push((pt.n_scale, rp, 1.0, 3.0 * ep));
    }
    let ln_n: Vec<f64> = points.iter().map(|p| p.n_scale.ln()).collect();
    let col =
        |f: &dyn Fn(&ScalingPoint) -> f64| points.iter().map(|p| f(p).ln()).collect::<Vec<_>>();
    let nu = 0.5 * ols(&ln_n, &col(&|p| p.x2.mean))?.slope;
    let mu = 0.5 * ols(&ln_n, &col(&|p| p.p2.mean))?.slope;
    let epsilon_fitted = ols(&ln_n, &col(&|p| p.tau))?.slope;
    Ok(ScalingReport {
        points,
        exponents: ScalingExponents::from_nu_mu(nu, mu),
        epsilon_fitted,
        x2_ratios,
        p2_ratios,
    })
}
