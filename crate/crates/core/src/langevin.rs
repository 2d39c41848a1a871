//! Truncated-Wigner Langevin dynamics and ensemble moment estimation.
//!
//! Stratonovich form (`xi = (xi_x + i xi_p)/sqrt 2`, `<xi_x^2> = <xi_p^2> = dt`):
//!
//! ```text
//! d alpha = [i delta alpha - i G alpha* - eta |alpha|^2 alpha] dt - i sqrt(2 eta) alpha* xi
//! ```
//!
//! The Ito drift carries the extra `+ eta alpha`. Quadratures
//! `x = sqrt2 Re alpha`, `p = sqrt2 Im alpha` obey
//!
//! ```text
//! dx = -(delta + G) p - (eta/2) x (x^2 + p^2) + sqrt(eta) (x xi_p - p xi_x)
//! dp =  (delta - G) x - (eta/2) p (x^2 + p^2) - sqrt(eta) (x xi_x + p xi_p)
//! ```
//!
//! and near `delta = G` reduce to
//!
//! ```text
//! dx = -2 G p - (eta/2) x^3
//! dp = (delta - G) x - (eta/2) p x^2 - sqrt(eta) x xi_x
//! ```
//!
//! Times are in the units reciprocal to the rates of [`ModelParams`].

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{
    g2_from_wigner_moments, ComplexAmplitude, Method, ModelParams, ObservableErrors, ObservableSet,
    QuadratureState,
};
use crate::semiclassical::{drift_c, semiclassical_photon_number, steady_states};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ItoEulerMaruyama,
    StratonovichHeun,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ItoEulerMaruyama => "ito_euler_maruyama",
            Scheme::StratonovichHeun => "stratonovich_heun",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ito_euler_maruyama" | "ito" => Ok(Scheme::ItoEulerMaruyama),
            "stratonovich_heun" | "stratonovich" => Ok(Scheme::StratonovichHeun),
            _ => Err(Error::InvalidParameter(format!("unknown scheme '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    FullComplex,
    FullQuadrature,
    ReducedCritical,
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::FullComplex => "full_complex",
            SystemKind::FullQuadrature => "full_quadrature",
            SystemKind::ReducedCritical => "reduced_critical",
        }
    }
}

impl std::str::FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_complex" => Ok(SystemKind::FullComplex),
            "full_quadrature" => Ok(SystemKind::FullQuadrature),
            "reduced_critical" => Ok(SystemKind::ReducedCritical),
            _ => Err(Error::InvalidParameter(format!("unknown system '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_burn: f64,
    pub t_sample: f64,
    pub sample_stride: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub system: SystemKind,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_burn: 20.0,
            t_sample: 200.0,
            sample_stride: 10,
            n_traj: 2000,
            seed: 0,
            scheme: Scheme::StratonovichHeun,
            system: SystemKind::FullComplex,
        }
    }
}

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_BATCHES: usize = 16;
/// Largest tolerated fraction of aborted trajectories.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

impl TrajectoryConfig {
    pub fn burn_steps(&self) -> usize {
        (self.t_burn / self.dt).round() as usize
    }

    pub fn sample_steps(&self) -> usize {
        (self.t_sample / self.dt).round() as usize
    }

    /// Recorded samples per trajectory.
    pub fn samples_per_trajectory(&self) -> usize {
        self.sample_steps() / self.sample_stride
    }

    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_stride as f64
    }

    /// Checks field ranges and the step-size guards against `params`.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_burn >= 0.0) || !self.t_burn.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_burn must be >= 0, got {}",
                self.t_burn
            )));
        }
        if !(self.t_sample > 0.0) || !self.t_sample.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_sample must be positive, got {}",
                self.t_sample
            )));
        }
        if self.sample_stride == 0 || self.n_traj == 0 {
            return Err(Error::InvalidParameter(
                "sample_stride and n_traj must be >= 1".into(),
            ));
        }
        let total = self.n_traj.saturating_mul(self.samples_per_trajectory());
        if total < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "{total} samples in total, at least {MIN_SAMPLES} needed"
            )));
        }
        let n_s = semiclassical_photon_number(params);
        let noise_load = self.dt * params.eta() * n_s.max(1.0);
        if noise_load > 0.05 {
            return Err(Error::StabilityGuard(format!(
                "dt * eta * max(n_s, 1) = {noise_load} exceeds 0.05"
            )));
        }
        let rotation = self.dt * params.delta().abs().max(params.g());
        if rotation > 0.1 {
            return Err(Error::StabilityGuard(format!(
                "dt * max(|delta|, G) = {rotation} exceeds 0.1"
            )));
        }
        Ok(())
    }
}

/// Per-step Gaussian increments, each of variance `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRealization {
    pub xi_x: f64,
    pub xi_p: f64,
}

impl NoiseRealization {
    pub const ZERO: NoiseRealization = NoiseRealization {
        xi_x: 0.0,
        xi_p: 0.0,
    };

    /// `xi = (xi_x + i xi_p) / sqrt 2`
    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.xi_x, self.xi_p) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Reproducible noise stream: trajectory `index` of run `seed`.
pub struct NoiseSource {
    rng: ChaCha8Rng,
    sqrt_dt: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, index: u64, dt: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            rng,
            sqrt_dt: dt.sqrt(),
        }
    }

    pub fn next(&mut self) -> NoiseRealization {
        let xi_x: f64 = self.rng.sample(StandardNormal);
        let xi_p: f64 = self.rng.sample(StandardNormal);
        NoiseRealization {
            xi_x: xi_x * self.sqrt_dt,
            xi_p: xi_p * self.sqrt_dt,
        }
    }

    /// One standard normal draw, for initial conditions.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// `A^S - A = -eta alpha`.
pub fn ito_stratonovich_drift_correction(
    params: &ModelParams,
    alpha: ComplexAmplitude,
) -> ComplexAmplitude {
    (-params.eta() * Complex64::from(alpha)).into()
}

pub fn ito_drift(params: &ModelParams, alpha: ComplexAmplitude) -> ComplexAmplitude {
    ito_drift_c(params, alpha.into()).into()
}

pub fn stratonovich_drift(params: &ModelParams, alpha: ComplexAmplitude) -> ComplexAmplitude {
    drift_c(params, alpha.into()).into()
}

fn ito_drift_c(params: &ModelParams, a: Complex64) -> Complex64 {
    drift_c(params, a) + params.eta() * a
}

fn noise_c(params: &ModelParams, a: Complex64, xi: Complex64) -> Complex64 {
    Complex64::new(0.0, -(2.0 * params.eta()).sqrt()) * a.conj() * xi
}

fn step_ito_c(params: &ModelParams, a: Complex64, noise: NoiseRealization, dt: f64) -> Complex64 {
    a + ito_drift_c(params, a) * dt + noise_c(params, a, noise.complex())
}

fn step_stratonovich_c(
    params: &ModelParams,
    a: Complex64,
    noise: NoiseRealization,
    dt: f64,
) -> Complex64 {
    let xi = noise.complex();
    let drift0 = drift_c(params, a);
    let noise0 = noise_c(params, a, xi);
    let pred = a + drift0 * dt + noise0;
    a + 0.5 * (drift0 + drift_c(params, pred)) * dt + 0.5 * (noise0 + noise_c(params, pred, xi))
}

/// Euler-Maruyama step of the Ito equation.
pub fn step_ito(
    params: &ModelParams,
    alpha: ComplexAmplitude,
    noise: NoiseRealization,
    dt: f64,
) -> ComplexAmplitude {
    step_ito_c(params, alpha.into(), noise, dt).into()
}

/// Stochastic Heun step of the Stratonovich equation.
pub fn step_stratonovich(
    params: &ModelParams,
    alpha: ComplexAmplitude,
    noise: NoiseRealization,
    dt: f64,
) -> ComplexAmplitude {
    step_stratonovich_c(params, alpha.into(), noise, dt).into()
}

type Vec2 = [f64; 2];

fn quad_drift(params: &ModelParams, s: Vec2) -> Vec2 {
    let (d, g, eta) = (params.delta(), params.g(), params.eta());
    let [x, p] = s;
    let r2 = x * x + p * p;
    [
        -(d + g) * p - 0.5 * eta * x * r2,
        (d - g) * x - 0.5 * eta * p * r2,
    ]
}

fn quad_noise(params: &ModelParams, s: Vec2, n: NoiseRealization) -> Vec2 {
    let se = params.eta().sqrt();
    let [x, p] = s;
    [
        se * (x * n.xi_p - p * n.xi_x),
        -se * (x * n.xi_x + p * n.xi_p),
    ]
}

fn reduced_drift(params: &ModelParams, s: Vec2) -> Vec2 {
    let (d, g, eta) = (params.delta(), params.g(), params.eta());
    let [x, p] = s;
    [
        -2.0 * g * p - 0.5 * eta * x * x * x,
        (d - g) * x - 0.5 * eta * p * x * x,
    ]
}

fn reduced_noise(params: &ModelParams, s: Vec2, n: NoiseRealization) -> Vec2 {
    [0.0, -params.eta().sqrt() * s[0] * n.xi_x]
}

fn heun<D, B>(s: Vec2, noise: NoiseRealization, dt: f64, drift: D, diffusion: B) -> Vec2
where
    D: Fn(Vec2) -> Vec2,
    B: Fn(Vec2, NoiseRealization) -> Vec2,
{
    let a0 = drift(s);
    let b0 = diffusion(s, noise);
    let pred = [s[0] + a0[0] * dt + b0[0], s[1] + a0[1] * dt + b0[1]];
    let a1 = drift(pred);
    let b1 = diffusion(pred, noise);
    [
        s[0] + 0.5 * (a0[0] + a1[0]) * dt + 0.5 * (b0[0] + b1[0]),
        s[1] + 0.5 * (a0[1] + a1[1]) * dt + 0.5 * (b0[1] + b1[1]),
    ]
}

fn step_quadrature_v(params: &ModelParams, s: Vec2, noise: NoiseRealization, dt: f64) -> Vec2 {
    heun(
        s,
        noise,
        dt,
        |v| quad_drift(params, v),
        |v, n| quad_noise(params, v, n),
    )
}

fn step_quadrature_ito_v(params: &ModelParams, s: Vec2, noise: NoiseRealization, dt: f64) -> Vec2 {
    let a = quad_drift(params, s);
    let b = quad_noise(params, s, noise);
    let eta = params.eta();
    [
        s[0] + (a[0] + eta * s[0]) * dt + b[0],
        s[1] + (a[1] + eta * s[1]) * dt + b[1],
    ]
}

fn step_reduced_v(params: &ModelParams, s: Vec2, noise: NoiseRealization, dt: f64) -> Vec2 {
    heun(
        s,
        noise,
        dt,
        |v| reduced_drift(params, v),
        |v, n| reduced_noise(params, v, n),
    )
}

// The reduced noise depends on x alone and drives p, so both readings agree.
fn step_reduced_ito_v(params: &ModelParams, s: Vec2, noise: NoiseRealization, dt: f64) -> Vec2 {
    let a = reduced_drift(params, s);
    let b = reduced_noise(params, s, noise);
    [s[0] + a[0] * dt + b[0], s[1] + a[1] * dt + b[1]]
}

/// Stochastic Heun step of the quadrature equations.
pub fn step_quadrature(
    params: &ModelParams,
    state: QuadratureState,
    noise: NoiseRealization,
    dt: f64,
) -> QuadratureState {
    let [x, p] = step_quadrature_v(params, [state.x, state.p], noise, dt);
    QuadratureState { x, p }
}

/// Stochastic Heun step of the reduced critical-region equations.
pub fn step_reduced_critical(
    params: &ModelParams,
    state: QuadratureState,
    noise: NoiseRealization,
    dt: f64,
) -> QuadratureState {
    let [x, p] = step_reduced_v(params, [state.x, state.p], noise, dt);
    QuadratureState { x, p }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One step of the configured system on quadrature coordinates.
fn advance(
    params: &ModelParams,
    config: &TrajectoryConfig,
    s: Vec2,
    noise: NoiseRealization,
) -> Vec2 {
    let dt = config.dt;
    match (config.system, config.scheme) {
        (SystemKind::FullComplex, scheme) => {
            let a = Complex64::new(s[0], s[1]) / SQRT2;
            let b = match scheme {
                Scheme::ItoEulerMaruyama => step_ito_c(params, a, noise, dt),
                Scheme::StratonovichHeun => step_stratonovich_c(params, a, noise, dt),
            };
            [SQRT2 * b.re, SQRT2 * b.im]
        }
        (SystemKind::FullQuadrature, Scheme::StratonovichHeun) => {
            step_quadrature_v(params, s, noise, dt)
        }
        (SystemKind::FullQuadrature, Scheme::ItoEulerMaruyama) => {
            step_quadrature_ito_v(params, s, noise, dt)
        }
        (SystemKind::ReducedCritical, Scheme::StratonovichHeun) => {
            step_reduced_v(params, s, noise, dt)
        }
        (SystemKind::ReducedCritical, Scheme::ItoEulerMaruyama) => {
            step_reduced_ito_v(params, s, noise, dt)
        }
    }
}

/// `|alpha|^2` beyond which a trajectory counts as diverged:
/// `100 max(n_s, (G/eta)^(2/3), 1)`.
pub fn abort_threshold(params: &ModelParams) -> f64 {
    let n_s = semiclassical_photon_number(params);
    100.0 * n_s.max(params.g_over_eta().powf(2.0 / 3.0)).max(1.0)
}

/// Vacuum Wigner draw, displaced onto alternating mean-field wells below
/// threshold.
fn initial_state(params: &ModelParams, index: usize, noise: &mut NoiseSource) -> Vec2 {
    let sigma = std::f64::consts::FRAC_1_SQRT_2;
    let x = sigma * noise.standard_normal();
    let p = sigma * noise.standard_normal();
    let branches = steady_states(params);
    if branches.len() == 3 {
        let b = branches[index % 2];
        [b.x_s + x, b.p_s + p]
    } else {
        [x, p]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Integrated autocorrelation time inferred from the batch variance.
    pub autocorrelation_time_estimate: f64,
}

/// Ensemble estimates of the symmetrized Wigner moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerMoments {
    pub x: MomentEstimate,
    pub p: MomentEstimate,
    pub x2: MomentEstimate,
    pub p2: MomentEstimate,
    pub xp: MomentEstimate,
    pub x4: MomentEstimate,
    pub x2p2: MomentEstimate,
    pub p4: MomentEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub observables: ObservableSet,
    pub moments: WignerMoments,
    pub n_traj: usize,
    pub aborted: usize,
    pub n_batches: usize,
    /// Normalized autocorrelation of `x^2` at lags `0, 1, ...` sample
    /// intervals, averaged over trajectories; present when requested.
    pub x2_autocorrelation: Option<Vec<f64>>,
}

const N_OBS: usize = 8;

#[derive(Debug, Clone, Copy, Default)]
struct Block {
    count: usize,
    sum: [f64; N_OBS],
    sum_sq: [f64; N_OBS],
}

impl Block {
    fn push(&mut self, x: f64, p: f64) {
        let (x2, p2) = (x * x, p * p);
        let v = [x, p, x2, p2, x * p, x2 * x2, x2 * p2, p2 * p2];
        self.count += 1;
        for k in 0..N_OBS {
            self.sum[k] += v[k];
            self.sum_sq[k] += v[k] * v[k];
        }
    }

    fn mean(&self, k: usize) -> f64 {
        self.sum[k] / self.count as f64
    }
}

enum Outcome {
    Done {
        blocks: Vec<Block>,
        acov: Option<Vec<f64>>,
    },
    Aborted,
}

struct RunPlan<'a> {
    params: &'a ModelParams,
    config: &'a TrajectoryConfig,
    blocks_per_traj: usize,
    threshold: f64,
    acov: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>, usize, usize)>,
}

fn run_one(plan: &RunPlan, index: usize) -> Outcome {
    let config = plan.config;
    let mut noise = NoiseSource::new(config.seed, index as u64, config.dt);
    let mut s = initial_state(plan.params, index, &mut noise);
    let burn = config.burn_steps();
    let samples = config.samples_per_trajectory();
    let mut blocks = vec![Block::default(); plan.blocks_per_traj];
    let mut series = plan.acov.as_ref().map(|_| Vec::with_capacity(samples));
    let limit = 2.0 * plan.threshold;
    let total_steps = burn + samples * config.sample_stride;
    for step in 1..=total_steps {
        s = advance(plan.params, config, s, noise.next());
        if step > burn && (step - burn) % config.sample_stride == 0 {
            let r2 = s[0] * s[0] + s[1] * s[1];
            if !(r2 <= limit) {
                return Outcome::Aborted;
            }
            let k = (step - burn) / config.sample_stride - 1;
            blocks[k * plan.blocks_per_traj / samples].push(s[0], s[1]);
            if let Some(series) = series.as_mut() {
                series.push(s[0] * s[0]);
            }
        } else if step % 64 == 0 && !(s[0] * s[0] + s[1] * s[1] <= limit) {
            return Outcome::Aborted;
        }
    }
    let acov = match (&plan.acov, series) {
        (Some((fwd, inv, len, lags)), Some(series)) => {
            Some(autocovariance_fft(&series, fwd, inv, *len, *lags))
        }
        _ => None,
    };
    Outcome::Done { blocks, acov }
}

/// Unnormalized autocovariance sums `sum_t (y_t - m)(y_{t+k} - m) / n`.
fn autocovariance_fft(
    series: &[f64],
    fwd: &Arc<dyn Fft<f64>>,
    inv: &Arc<dyn Fft<f64>>,
    len: usize,
    lags: usize,
) -> Vec<f64> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = series
        .iter()
        .map(|&y| Complex64::new(y - mean, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    buf.iter()
        .take(lags)
        .map(|c| c.re / (len as f64 * n as f64))
        .collect()
}

/// Normalized autocorrelation of one series, lags `0..max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::InvalidParameter("series too short".into()));
    }
    let lags = max_lag.min(series.len());
    let len = (2 * series.len()).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let c = autocovariance_fft(series, &fwd, &inv, len, lags);
    if !(c[0] > 0.0) {
        return Err(Error::InvalidParameter("constant series".into()));
    }
    Ok(c.iter().map(|v| v / c[0]).collect())
}

/// Integrated autocorrelation time `dt (1/2 + sum_{k=1}^{W} rho_k)` with the
/// window `W` the smallest lag satisfying `W >= 5 tau(W) / dt`.
pub fn integrated_autocorrelation_time(rho: &[f64], sample_interval: f64) -> Result<f64> {
    let mut tau = 0.5;
    for (w, r) in rho.iter().enumerate().skip(1) {
        tau += r;
        if w as f64 >= 5.0 * tau {
            return Ok(tau * sample_interval);
        }
    }
    Err(Error::Fit(format!(
        "autocorrelation window did not close within {} lags",
        rho.len()
    )))
}

fn estimate(blocks: &[Block], k: usize, sample_interval: f64) -> MomentEstimate {
    let count: usize = blocks.iter().map(|b| b.count).sum();
    let mean = blocks.iter().map(|b| b.sum[k]).sum::<f64>() / count as f64;
    let nb = blocks.len() as f64;
    let bm = blocks.iter().map(|b| b.mean(k)).sum::<f64>() / nb;
    let var_bm = blocks.iter().map(|b| (b.mean(k) - bm).powi(2)).sum::<f64>() / (nb - 1.0);
    let var_sample = blocks.iter().map(|b| b.sum_sq[k]).sum::<f64>() / count as f64 - mean * mean;
    let per_batch = count as f64 / nb;
    let tau = if var_sample > 0.0 {
        0.5 * sample_interval * per_batch * var_bm / var_sample
    } else {
        0.0
    };
    MomentEstimate {
        mean,
        std_error: (var_bm / nb).sqrt(),
        n_samples: count,
        autocorrelation_time_estimate: tau,
    }
}

/// Standard error of a linear combination of batch means.
fn linear_error(blocks: &[Block], coeffs: &[(usize, f64)]) -> f64 {
    let vals: Vec<f64> = blocks
        .iter()
        .map(|b| coeffs.iter().map(|&(k, c)| c * b.mean(k)).sum())
        .collect();
    let nb = vals.len() as f64;
    let m = vals.iter().sum::<f64>() / nb;
    (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt()
}

fn g2_of(sum: &[f64; N_OBS], count: f64) -> Option<f64> {
    let m = |k: usize| sum[k] / count;
    g2_from_wigner_moments(m(2), m(3), m(5), m(6), m(7))
}

/// Delete-one jackknife error of `g2` over batches.
fn g2_jackknife(blocks: &[Block]) -> Option<f64> {
    let mut total = [0.0; N_OBS];
    let mut count = 0usize;
    for b in blocks {
        for k in 0..N_OBS {
            total[k] += b.sum[k];
        }
        count += b.count;
    }
    let mut leave_out = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut s = total;
        for k in 0..N_OBS {
            s[k] -= b.sum[k];
        }
        leave_out.push(g2_of(&s, (count - b.count) as f64)?);
    }
    let nb = leave_out.len() as f64;
    let m = leave_out.iter().sum::<f64>() / nb;
    Some(((nb - 1.0) / nb * leave_out.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sqrt())
}

/// Trajectories handled per reduction chunk; fixes the summation order.
const CHUNK: usize = 64;

pub fn run_ensemble(params: &ModelParams, config: &TrajectoryConfig) -> Result<ObservableSet> {
    Ok(run_ensemble_detailed(params, config, false)?.observables)
}

/// Runs `config.n_traj` independent trajectories and reduces them in index
/// order, so the result does not depend on the thread count.
pub fn run_ensemble_detailed(
    params: &ModelParams,
    config: &TrajectoryConfig,
    with_autocorrelation: bool,
) -> Result<EnsembleResult> {
    config.validate(params)?;
    let samples = config.samples_per_trajectory();
    let blocks_per_traj = if config.n_traj >= MIN_BATCHES {
        1
    } else {
        MIN_BATCHES.div_ceil(config.n_traj)
    };
    if blocks_per_traj > samples {
        return Err(Error::InvalidParameter(format!(
            "{samples} samples per trajectory cannot form {blocks_per_traj} batches"
        )));
    }
    let acov = with_autocorrelation.then(|| {
        let len = (2 * samples).next_power_of_two();
        let mut planner = FftPlanner::new();
        let lags = (samples / 2).max(2);
        (
            planner.plan_fft_forward(len),
            planner.plan_fft_inverse(len),
            len,
            lags,
        )
    });
    let plan = RunPlan {
        params,
        config,
        blocks_per_traj,
        threshold: abort_threshold(params),
        acov,
    };

    let chunks: Vec<(Vec<Block>, usize, Option<Vec<f64>>)> = (0..config.n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut blocks = Vec::new();
            let mut aborted = 0;
            let mut acov_sum: Option<Vec<f64>> = None;
            for i in c * CHUNK..((c + 1) * CHUNK).min(config.n_traj) {
                match run_one(&plan, i) {
                    Outcome::Done { blocks: b, acov } => {
                        blocks.extend(b);
                        if let Some(a) = acov {
                            match acov_sum.as_mut() {
                                Some(s) => s.iter_mut().zip(&a).for_each(|(s, v)| *s += v),
                                None => acov_sum = Some(a),
                            }
                        }
                    }
                    Outcome::Aborted => aborted += 1,
                }
            }
            (blocks, aborted, acov_sum)
        })
        .collect();

    let mut blocks = Vec::with_capacity(config.n_traj * blocks_per_traj);
    let mut aborted = 0;
    let mut acov_total: Option<Vec<f64>> = None;
    for (b, a, ac) in chunks {
        blocks.extend(b);
        aborted += a;
        if let Some(ac) = ac {
            match acov_total.as_mut() {
                Some(s) => s.iter_mut().zip(&ac).for_each(|(s, v)| *s += v),
                None => acov_total = Some(ac),
            }
        }
    }
    if aborted as f64 > MAX_ABORT_FRACTION * config.n_traj as f64 {
        return Err(Error::TooManyAborted {
            aborted,
            total: config.n_traj,
        });
    }
    if blocks.len() < MIN_BATCHES {
        return Err(Error::InvalidParameter(format!(
            "only {} batches survived",
            blocks.len()
        )));
    }

    let dts = config.sample_interval();
    let e = |k| estimate(&blocks, k, dts);
    let moments = WignerMoments {
        x: e(0),
        p: e(1),
        x2: e(2),
        p2: e(3),
        xp: e(4),
        x4: e(5),
        x2p2: e(6),
        p4: e(7),
    };
    let g2 = g2_from_wigner_moments(
        moments.x2.mean,
        moments.p2.mean,
        moments.x4.mean,
        moments.x2p2.mean,
        moments.p4.mean,
    );
    let errors = ObservableErrors {
        n: linear_error(&blocks, &[(2, 0.5), (3, 0.5)]),
        re_a2: linear_error(&blocks, &[(2, 0.5), (3, -0.5)]),
        im_a2: moments.xp.std_error,
        x2: moments.x2.std_error,
        p2: moments.p2.std_error,
        xp_sym: moments.xp.std_error,
        g2: g2.and_then(|_| g2_jackknife(&blocks)),
    };
    let mut observables = ObservableSet::from_quadrature_moments(
        moments.x2.mean,
        moments.p2.mean,
        moments.xp.mean,
        g2,
        Method::Langevin,
    );
    observables.errors = Some(errors);
    let x2_autocorrelation =
        acov_total.and_then(|a| (a[0] > 0.0).then(|| a.iter().map(|v| v / a[0]).collect()));
    Ok(EnsembleResult {
        observables,
        moments,
        n_traj: config.n_traj,
        aborted,
        n_batches: blocks.len(),
        x2_autocorrelation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleTrajectoryOptions {
    /// Selects the noise stream, as trajectory `index` of an ensemble.
    pub index: usize,
    pub noise: bool,
    /// Start here instead of drawing from the vacuum Wigner function.
    pub initial: Option<QuadratureState>,
}

impl Default for SingleTrajectoryOptions {
    fn default() -> Self {
        Self {
            index: 0,
            noise: true,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

/// One trajectory over `[0, t_burn + t_sample]`, recorded every
/// `sample_stride` steps including `t = 0`.
pub fn simulate_trajectory(
    params: &ModelParams,
    config: &TrajectoryConfig,
    options: &SingleTrajectoryOptions,
) -> Result<SampledTrajectory> {
    let single = TrajectoryConfig {
        n_traj: config.n_traj.max(1),
        ..*config
    };
    if !(single.dt > 0.0) || single.sample_stride == 0 {
        return Err(Error::InvalidParameter(
            "dt > 0 and sample_stride >= 1 required".into(),
        ));
    }
    let n_s = semiclassical_photon_number(params);
    if single.dt * params.eta() * n_s.max(1.0) > 0.05 {
        return Err(Error::StabilityGuard(
            "dt * eta * max(n_s, 1) exceeds 0.05".into(),
        ));
    }
    let mut noise = NoiseSource::new(config.seed, options.index as u64, config.dt);
    let mut s = match options.initial {
        Some(q) => [q.x, q.p],
        None => initial_state(params, options.index, &mut noise),
    };
    let steps = config.burn_steps() + config.sample_steps();
    let limit = 2.0 * abort_threshold(params);
    let capacity = steps / config.sample_stride + 1;
    let mut out = SampledTrajectory {
        times: Vec::with_capacity(capacity),
        xs: Vec::with_capacity(capacity),
        ps: Vec::with_capacity(capacity),
    };
    out.times.push(0.0);
    out.xs.push(s[0]);
    out.ps.push(s[1]);
    for step in 1..=steps {
        let n = if options.noise {
            noise.next()
        } else {
            NoiseRealization::ZERO
        };
        s = advance(params, config, s, n);
        let r2 = s[0] * s[0] + s[1] * s[1];
        if !(r2 <= limit) {
            return Err(Error::Divergence {
                time: step as f64 * config.dt,
                norm_sqr: 0.5 * r2,
            });
        }
        if step % config.sample_stride == 0 {
            out.times.push(step as f64 * config.dt);
            out.xs.push(s[0]);
            out.ps.push(s[1]);
        }
    }
    Ok(out)
}
