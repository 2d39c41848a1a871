//! Wigner functions sampled on a symmetric rectangular grid.

use rayon::prelude::*;

use crate::equilibrium::{boltzmann_wigner, EffectiveEquilibrium};
use crate::error::{Error, Result};
use crate::exact::ExactWigner;
use crate::model::{Method, ModelParams};
use crate::quadrature::{simpson_weights, symmetric_nodes};

pub const NORMALIZATION_NOTE: &str = "integral dx dp / 2 = 1";

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// Row-major: `values[i * p_axis.len() + j]` is `W(x_i, p_j)`.
    pub values: Vec<f64>,
    pub method: Method,
    pub params: ModelParams,
}

impl WignerGrid {
    /// Samples the exact or Boltzmann Wigner function on `resolution x
    /// resolution` points spanning `[-half_width, half_width]` on both axes.
    pub fn sample(
        method: Method,
        params: &ModelParams,
        half_width: f64,
        resolution: usize,
    ) -> Result<Self> {
        Self::sample_rect(
            method, params, half_width, half_width, resolution, resolution,
        )
    }

    pub fn sample_rect(
        method: Method,
        params: &ModelParams,
        x_half_width: f64,
        p_half_width: f64,
        x_points: usize,
        p_points: usize,
    ) -> Result<Self> {
        for hw in [x_half_width, p_half_width] {
            if !(hw > 0.0) || !hw.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "half-width must be positive, got {hw}"
                )));
            }
        }
        if x_points < 3 || p_points < 3 || x_points % 2 == 0 || p_points % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs an odd number (>= 3) of points per axis, got {x_points} x {p_points}"
            )));
        }
        let x_axis = symmetric_nodes(x_half_width, x_points);
        let p_axis = symmetric_nodes(p_half_width, p_points);
        let eval: Box<dyn Fn(f64, f64) -> Result<f64> + Sync> = match method {
            Method::Exact => {
                let w = ExactWigner::new(params)?;
                Box::new(move |x, p| w.eval(x, p))
            }
            Method::Boltzmann => {
                let eq = EffectiveEquilibrium::new(params)?;
                Box::new(move |x, p| Ok(boltzmann_wigner(&eq, x, p)))
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "no Wigner function for method {other}"
                )))
            }
        };
        let rows: Vec<Vec<f64>> = x_axis
            .par_iter()
            .map(|&x| {
                p_axis
                    .iter()
                    .map(|&p| {
                        let v = eval(x, p)
                            .map_err(|e| e.context(format!("Wigner at (x, p) = ({x}, {p})")))?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::Quadrature(format!(
                                "Wigner value not finite at (x, p) = ({x}, {p})"
                            )))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            x_axis,
            p_axis,
            values: rows.concat(),
            method,
            params: *params,
        })
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.len() + j]
    }

    /// Tensor-product Simpson estimate of `integral f(x, p) W dx dp / 2`.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let hx = self.x_axis[1] - self.x_axis[0];
        let hp = self.p_axis[1] - self.p_axis[0];
        let wx = simpson_weights(self.x_axis.len(), hx);
        let wp = simpson_weights(self.p_axis.len(), hp);
        let mut total = 0.0;
        for (i, &x) in self.x_axis.iter().enumerate() {
            let row: f64 = self
                .p_axis
                .iter()
                .enumerate()
                .map(|(j, &p)| wp[j] * f(x, p) * self.value(i, j))
                .sum();
            total += wx[i] * row;
        }
        0.5 * total
    }

    pub fn normalization(&self) -> f64 {
        self.integrate(|_, _| 1.0)
    }

    /// `(x, p)` of the largest grid value; ties resolve to the first in
    /// row-major order.
    pub fn argmax(&self) -> (f64, f64) {
        let (k, _) =
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, &v)| {
                    if v > best.1 {
                        (k, v)
                    } else {
                        best
                    }
                });
        let n = self.p_axis.len();
        (self.x_axis[k / n], self.p_axis[k % n])
    }

    /// Local maxima above `threshold * max`, compared against the eight
    /// neighbours.
    pub fn local_maxima(&self, threshold: f64) -> Vec<(f64, f64)> {
        let (nx, np) = (self.x_axis.len(), self.p_axis.len());
        let top = self.values.iter().cloned().fold(0.0, f64::max);
        let mut out = Vec::new();
        for i in 1..nx - 1 {
            for j in 1..np - 1 {
                let v = self.value(i, j);
                if v < threshold * top {
                    continue;
                }
                let is_peak = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dj| {
                        (di == 0 && dj == 0)
                            || v >= self.value((i as i64 + di) as usize, (j as i64 + dj) as usize)
                    })
                });
                if is_peak {
                    out.push((self.x_axis[i], self.p_axis[j]));
                }
            }
        }
        out
    }

    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.x_axis[1] - self.x_axis[0],
            self.p_axis[1] - self.p_axis[0],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_observables, phase_space_extent};
    use crate::semiclassical::steady_states;

    fn params(d: f64, g: f64) -> ModelParams {
        ModelParams::new(d, g, 1.0).unwrap()
    }

    #[test]
    fn vacuum_grid() {
        let g = WignerGrid::sample(Method::Exact, &params(0.0, 0.0), 6.0, 257).unwrap();
        assert!((g.normalization() - 1.0).abs() < 1e-10);
        assert_eq!(g.argmax(), (0.0, 0.0));
        assert!((g.integrate(|x, _| x * x) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_grids() {
        let p = params(20.0, 20.0);
        assert!(WignerGrid::sample(Method::Exact, &p, 5.0, 256).is_err());
        assert!(WignerGrid::sample(Method::Exact, &p, -1.0, 257).is_err());
        assert!(WignerGrid::sample(Method::Langevin, &p, 5.0, 257).is_err());
    }

    #[test]
    fn exact_grid_normalization_and_moments() {
        for d in [17.0, 20.0, 23.0] {
            let p = params(d, 20.0);
            let (l, n) = phase_space_extent(&p).unwrap();
            let g = WignerGrid::sample(Method::Exact, &p, l, n).unwrap();
            assert!(
                (g.normalization() - 1.0).abs() < 1e-6,
                "{d}: {}",
                g.normalization()
            );
            let o = exact_observables(&p).unwrap();
            let x2 = g.integrate(|x, _| x * x);
            let p2 = g.integrate(|_, q| q * q);
            let xp = g.integrate(|x, q| x * q);
            assert!((x2 / o.x2 - 1.0).abs() < 1e-3, "{d}: {x2} vs {}", o.x2);
            assert!((p2 / o.p2 - 1.0).abs() < 1e-3, "{d}: {p2} vs {}", o.p2);
            assert!((xp - o.xp_sym).abs() < 1e-3 * o.xp_sym.abs().max(0.1));
            assert!(g.integrate(|x, _| x).abs() < 1e-6);
            assert!(g.integrate(|_, q| q).abs() < 1e-6);
        }
    }

    #[test]
    fn exact_peaks_near_mean_field_branches() {
        let p = params(17.0, 20.0);
        let g = WignerGrid::sample(Method::Exact, &p, 8.0, 321).unwrap();
        let peaks = g.local_maxima(0.5);
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        let plus = steady_states(&p)[0];
        let (x, q) = peaks.iter().cloned().find(|(x, _)| *x > 0.0).unwrap();
        assert!(
            (x - plus.x_s).abs() < 0.15 * plus.x_s,
            "{x} vs {}",
            plus.x_s
        );
        assert!((q - plus.p_s).abs() < 0.5, "{q} vs {}", plus.p_s);
    }

    #[test]
    fn boltzmann_grid_is_bimodal_below_threshold() {
        let p = params(17.0, 20.0);
        let g = WignerGrid::sample(Method::Boltzmann, &p, 8.0, 321).unwrap();
        let peaks = g.local_maxima(0.5);
        assert_eq!(peaks.len(), 2);
        assert!((g.normalization() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn methods_share_peak_at_criticality() {
        let p = params(20.0, 20.0);
        let a = WignerGrid::sample(Method::Exact, &p, 8.0, 161).unwrap();
        let b = WignerGrid::sample(Method::Boltzmann, &p, 8.0, 161).unwrap();
        let (ax, ap) = a.argmax();
        let (bx, bp) = b.argmax();
        let (hx, hp) = a.cell_size();
        assert!(
            (ax.abs() - bx.abs()).abs() <= hx + 1e-12 && (ap.abs() - bp.abs()).abs() <= hp + 1e-12
        );
    }
}
