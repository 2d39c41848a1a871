//! One-dimensional Simpson rules.

use crate::error::{Error, Result};

/// Composite Simpson weights for `n` (odd, >= 3) equally spaced nodes with
/// spacing `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(
        n >= 3 && n % 2 == 1,
        "Simpson needs an odd node count >= 3, got {n}"
    );
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// `n` equally spaced nodes on `[-half_width, half_width]`.
pub fn symmetric_nodes(half_width: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| -half_width + i as f64 * h).collect()
}

/// Composite Simpson integral of `f` on `[a, b]` with `n` nodes.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    simpson_weights(n, h)
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(a + i as f64 * h))
        .sum()
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 50;
const MAX_EVALUATIONS: usize = 5_000_000;

/// Adaptive Simpson quadrature to absolute tolerance `abs_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Integral> {
    if !(b > a) {
        return Err(Error::Quadrature(format!("empty interval [{a}, {b}]")));
    }
    // Seed with a fixed panel split so narrow features are not skipped.
    const PANELS: usize = 32;
    let h = (b - a) / PANELS as f64;
    let mut state = State {
        evaluations: 0,
        error: 0.0,
    };
    let mut total = 0.0;
    for k in 0..PANELS {
        let lo = a + k as f64 * h;
        let hi = lo + h;
        let fa = eval(&f, lo, &mut state)?;
        let fm = eval(&f, 0.5 * (lo + hi), &mut state)?;
        let fb = eval(&f, hi, &mut state)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += recurse(
            &f,
            lo,
            hi,
            fa,
            fm,
            fb,
            whole,
            abs_tol / PANELS as f64,
            0,
            &mut state,
        )?;
    }
    Ok(Integral {
        value: total,
        error_estimate: state.error,
        evaluations: state.evaluations,
    })
}

struct State {
    evaluations: usize,
    error: f64,
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64, state: &mut State) -> Result<f64> {
    state.evaluations += 1;
    if state.evaluations > MAX_EVALUATIONS {
        return Err(Error::Quadrature("evaluation budget exhausted".into()));
    }
    let v = f(x);
    if !v.is_finite() {
        return Err(Error::Quadrature(format!(
            "integrand not finite at x = {x}"
        )));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    state: &mut State,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = eval(f, lm, state)?;
    let frm = eval(f, rm, state)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature(format!(
            "maximum subdivision depth reached near x = {m}"
        )));
    }
    if delta.abs() <= 15.0 * tol {
        state.error += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, state)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, state)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 5);
        assert_relative_eq!(v, 4.0 - 4.0 + 2.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_interval() {
        let w = simpson_weights(257, 0.1);
        assert_relative_eq!(w.iter().sum::<f64>(), 25.6, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_gaussian() {
        let r = adaptive_simpson(|x| (-x * x).exp(), -10.0, 10.0, 1e-13).unwrap();
        assert_relative_eq!(r.value, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        assert!(r.error_estimate < 1e-12);
    }

    #[test]
    fn adaptive_rejects_nan_and_empty() {
        assert!(adaptive_simpson(|_| f64::NAN, 0.0, 1.0, 1e-10).is_err());
        assert!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-10).is_err());
    }
}
