use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default stopping threshold on `|t_k| / |partial sum|`.
pub const DEFAULT_TOLERANCE: f64 = 1e-15;
/// Hard cap on the number of series terms.
pub const MAX_TERMS: usize = 100_000;
/// Consecutive small terms required before the series is declared converged.
const SMALL_TERMS_REQUIRED: usize = 3;

/// A generalized hypergeometric function `pFq(a; b; z)` with `p <= q`, so the
/// series is entire in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergeometricSpec {
    numerator: Vec<Complex64>,
    denominator: Vec<Complex64>,
    argument: Complex64,
}

impl HypergeometricSpec {
    pub fn new(
        numerator: Vec<Complex64>,
        denominator: Vec<Complex64>,
        argument: Complex64,
    ) -> Result<Self> {
        if numerator.len() > denominator.len() {
            return Err(Error::InvalidParameter(format!(
                "{}F{} is not entire; only p <= q is supported",
                numerator.len(),
                denominator.len()
            )));
        }
        let finite = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        if !numerator.iter().all(finite) || !denominator.iter().all(finite) || !finite(&argument) {
            return Err(Error::NonFinite("hypergeometric parameters"));
        }
        for (index, b) in denominator.iter().enumerate() {
            if b.im == 0.0 && b.re <= 0.0 && b.re == b.re.round() {
                return Err(Error::InvalidDenominator {
                    index,
                    value: b.to_string(),
                });
            }
        }
        Ok(Self {
            numerator,
            denominator,
            argument,
        })
    }

    pub fn numerator(&self) -> &[Complex64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[Complex64] {
        &self.denominator
    }

    pub fn argument(&self) -> Complex64 {
        self.argument
    }
}

/// Value of a series evaluation plus diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: Complex64,
    pub terms_used: usize,
    pub estimated_relative_error: f64,
    /// Largest `|t_k|` encountered. `log10(max_term_magnitude / |value|)` is
    /// roughly the number of decimal digits lost to cancellation.
    pub max_term_magnitude: f64,
}

impl SeriesResult {
    pub fn digits_lost(&self) -> f64 {
        (self.max_term_magnitude / self.value.norm())
            .log10()
            .max(0.0)
    }
}

/// Neumaier-compensated accumulator, one per real component.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Evaluates `pFq` with the default tolerance.
pub fn pfq(spec: &HypergeometricSpec) -> Result<SeriesResult> {
    pfq_with_tolerance(spec, DEFAULT_TOLERANCE)
}

/// Evaluates `pFq` by its Taylor series with compensated accumulation.
///
/// Terms follow `t_{k+1} = t_k z prod(a_i + k) / (prod(b_j + k) (k + 1))`.
/// Summation stops once three consecutive terms are below `tolerance`
/// relative to the partial sum while the terms are decreasing.
pub fn pfq_with_tolerance(spec: &HypergeometricSpec, tolerance: f64) -> Result<SeriesResult> {
    let z = spec.argument;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    re.add(1.0);

    let mut term = Complex64::new(1.0, 0.0);
    let mut max_term = 1.0_f64;
    let mut abs_sum = 1.0_f64;
    let mut small_run = 0usize;

    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let mut factor = z / (kf + 1.0);
        for a in &spec.numerator {
            factor *= a + kf;
        }
        for b in &spec.denominator {
            factor /= b + kf;
        }
        let prev_mag = term.norm();
        term *= factor;
        let mag = term.norm();
        if !mag.is_finite() {
            return Err(Error::SeriesOverflow { terms: k + 1 });
        }
        re.add(term.re);
        im.add(term.im);
        max_term = max_term.max(mag);
        abs_sum += mag;

        let partial = Complex64::new(re.value(), im.value());
        let partial_mag = partial.norm();
        if !partial_mag.is_finite() {
            return Err(Error::SeriesOverflow { terms: k + 1 });
        }
        let last_ratio = if prev_mag > 0.0 { mag / prev_mag } else { 0.0 };
        let decreasing = last_ratio < 1.0;
        let small = mag == 0.0 || (partial_mag > 0.0 && mag / partial_mag < tolerance);
        if small && decreasing {
            small_run += 1;
            if small_run >= SMALL_TERMS_REQUIRED {
                let terms_used = k + 2;
                let value = partial;
                let value_mag = value.norm();
                let tail = if last_ratio < 1.0 && value_mag > 0.0 {
                    mag * last_ratio / (1.0 - last_ratio) / value_mag
                } else {
                    0.0
                };
                let ops = 2.0 * (spec.numerator.len() + spec.denominator.len() + 2) as f64;
                let rounding = if value_mag > 0.0 {
                    f64::EPSILON * (1.0 + ops * (terms_used as f64).sqrt()) * abs_sum / value_mag
                } else {
                    f64::INFINITY
                };
                return Ok(SeriesResult {
                    value,
                    terms_used,
                    estimated_relative_error: tail + rounding,
                    max_term_magnitude: max_term,
                });
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergence { terms: MAX_TERMS })
}

/// `0F1(; b; z)`
pub fn hyp0f1(b: Complex64, z: Complex64) -> Result<SeriesResult> {
    pfq(&HypergeometricSpec::new(vec![], vec![b], z)?)
}

/// `1F2(a; b1, b2; z)`
pub fn hyp1f2(a: Complex64, b1: Complex64, b2: Complex64, z: Complex64) -> Result<SeriesResult> {
    pfq(&HypergeometricSpec::new(vec![a], vec![b1, b2], z)?)
}

/// `2F3(a1, a2; b1, b2, b3; z)`
pub fn hyp2f3(
    a1: Complex64,
    a2: Complex64,
    b1: Complex64,
    b2: Complex64,
    b3: Complex64,
    z: Complex64,
) -> Result<SeriesResult> {
    pfq(&HypergeometricSpec::new(vec![a1, a2], vec![b1, b2, b3], z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Error-free transformations for an independent double-double oracle.
    #[derive(Clone, Copy)]
    struct Dd {
        hi: f64,
        lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        fn new(x: f64) -> Self {
            Dd { hi: x, lo: 0.0 }
        }
        fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (hi, lo) = two_sum(s, e + self.lo + o.lo);
            Dd { hi, lo }
        }
        fn neg(self) -> Dd {
            Dd {
                hi: -self.hi,
                lo: -self.lo,
            }
        }
        fn mul(self, o: Dd) -> Dd {
            let (p, e) = two_prod(self.hi, o.hi);
            let (hi, lo) = two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
            Dd { hi, lo }
        }
        fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.add(o.mul(Dd::new(q1)).neg());
            let q2 = r.hi / o.hi;
            let r = r.add(o.mul(Dd::new(q2)).neg());
            let q3 = r.hi / o.hi;
            Dd::new(q1).add(Dd::new(q2)).add(Dd::new(q3))
        }
    }

    #[derive(Clone, Copy)]
    struct Cdd {
        re: Dd,
        im: Dd,
    }

    impl Cdd {
        fn new(re: f64, im: f64) -> Self {
            Cdd {
                re: Dd::new(re),
                im: Dd::new(im),
            }
        }
        fn add(self, o: Cdd) -> Cdd {
            Cdd {
                re: self.re.add(o.re),
                im: self.im.add(o.im),
            }
        }
        fn mul(self, o: Cdd) -> Cdd {
            Cdd {
                re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
                im: self.re.mul(o.im).add(self.im.mul(o.re)),
            }
        }
        fn div(self, o: Cdd) -> Cdd {
            let den = o.re.mul(o.re).add(o.im.mul(o.im));
            let num = self.mul(Cdd {
                re: o.re,
                im: o.im.neg(),
            });
            Cdd {
                re: num.re.div(den),
                im: num.im.div(den),
            }
        }
    }

    /// Straight double-double summation of the series, fixed number of terms.
    fn dd_series(a: &[Complex64], b: &[Complex64], z: Complex64, terms: usize) -> Complex64 {
        let zz = Cdd::new(z.re, z.im);
        let mut t = Cdd::new(1.0, 0.0);
        let mut s = t;
        for k in 0..terms {
            let kf = k as f64;
            let mut num = zz;
            for ai in a {
                num = num.mul(Cdd::new(ai.re + kf, ai.im));
            }
            let mut den = Cdd::new(kf + 1.0, 0.0);
            for bj in b {
                den = den.mul(Cdd::new(bj.re + kf, bj.im));
            }
            t = t.mul(num.div(den));
            s = s.add(t);
        }
        Complex64::new(s.re.hi + s.re.lo, s.im.hi + s.im.lo)
    }

    #[test]
    fn zero_argument_is_one() {
        for (a, b) in [
            (vec![], vec![c(0.5, -3.0)]),
            (vec![c(1.5, 0.0)], vec![c(0.5, 2.0), c(0.5, -2.0)]),
            (
                vec![c(1.5, 0.0), c(1.5, 0.0)],
                vec![c(0.5, 0.0), c(1.5, 1.0), c(1.5, -1.0)],
            ),
        ] {
            let r = pfq(&HypergeometricSpec::new(a, b, c(0.0, 0.0)).unwrap()).unwrap();
            assert_eq!(r.value, c(1.0, 0.0));
            assert!(r.terms_used >= 1);
        }
    }

    #[test]
    fn bessel_hyperbolic_identities() {
        let r = hyp0f1(c(0.5, 0.0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(r.value.re, 2f64.cosh(), max_relative = 1e-14);
        assert_relative_eq!(r.value.re, 3.762_195_691_083_631, max_relative = 1e-14);
        let r = hyp0f1(c(1.5, 0.0), c(1.0, 0.0)).unwrap();
        assert_relative_eq!(r.value.re, 2f64.sinh() / 2.0, max_relative = 1e-14);
        assert_relative_eq!(r.value.re, 1.813_430_203_923_509, max_relative = 1e-14);
    }

    #[test]
    fn one_f_two_against_double_double_oracle() {
        let a = [c(0.5, 0.0)];
        let b = [c(0.5, -20.0), c(0.5, 20.0)];
        let z = c(400.0, 0.0);
        let r = pfq(&HypergeometricSpec::new(a.to_vec(), b.to_vec(), z).unwrap()).unwrap();
        let oracle = dd_series(&a, &b, z, 400);
        assert!((r.value - oracle).norm() / oracle.norm() < 1e-14);
        // mpmath reference
        assert_relative_eq!(r.value.re, 3.509_814_264_588_529_7, max_relative = 1e-13);
        assert!(r.value.im.abs() < 1e-14);
    }

    #[test]
    fn two_f_three_against_double_double_oracle() {
        let a = [c(1.5, 0.0), c(1.5, 0.0)];
        let b = [c(0.5, 0.0), c(1.5, -20.0), c(1.5, 20.0)];
        let z = c(400.0, 0.0);
        let r = pfq(&HypergeometricSpec::new(a.to_vec(), b.to_vec(), z).unwrap()).unwrap();
        let oracle = dd_series(&a, &b, z, 400);
        assert!((r.value - oracle).norm() / oracle.norm() < 1e-14);
        assert_relative_eq!(r.value.re, 315.109_166_403_022_26, max_relative = 1e-13);
    }

    #[test]
    fn complex_wigner_argument_against_oracle() {
        // 0F1(1/2 - 17i; -10i (3 - i)^2), a typical Wigner-grid evaluation
        let b = c(0.5, -17.0);
        let z = c(0.0, -10.0) * c(3.0, -1.0) * c(3.0, -1.0);
        let r = hyp0f1(b, z).unwrap();
        let oracle = dd_series(&[], &[b], z, 600);
        assert!((r.value - oracle).norm() / oracle.norm() < 1e-12);
        let mp = c(-41.370_491_400_189_77, 21.434_804_453_479_043);
        assert!((r.value - mp).norm() / mp.norm() < 1e-11);
    }

    #[test]
    fn invalid_denominators_rejected() {
        assert!(matches!(
            HypergeometricSpec::new(vec![], vec![c(-2.0, 0.0)], c(1.0, 0.0)),
            Err(Error::InvalidDenominator { index: 0, .. })
        ));
        assert!(HypergeometricSpec::new(vec![], vec![c(0.0, 0.0)], c(1.0, 0.0)).is_err());
        assert!(HypergeometricSpec::new(vec![], vec![c(-2.0, 1e-9)], c(1.0, 0.0)).is_ok());
        assert!(
            HypergeometricSpec::new(vec![c(1.0, 0.0); 2], vec![c(1.0, 0.0)], c(0.5, 0.0)).is_err()
        );
    }

    #[test]
    fn terminating_series() {
        // 1F2(-2; 1, 1; z) = 1 - 2z + z^2/4
        let z = 3.0;
        let r = hyp1f2(c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(z, 0.0)).unwrap();
        assert_relative_eq!(
            r.value.re,
            1.0 - 2.0 * z + z * z / 4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn tighter_tolerance_within_error_estimate() {
        let spec = HypergeometricSpec::new(
            vec![c(1.5, 0.0)],
            vec![c(1.5, -23.0), c(0.5, 23.0)],
            c(400.0, 0.0),
        )
        .unwrap();
        let loose = pfq_with_tolerance(&spec, 1e-10).unwrap();
        let tight = pfq_with_tolerance(&spec, 1e-17).unwrap();
        assert!(tight.terms_used >= loose.terms_used);
        let change = (tight.value - loose.value).norm() / tight.value.norm();
        assert!(
            change <= loose.estimated_relative_error,
            "{change} > {}",
            loose.estimated_relative_error
        );
        assert!(loose.estimated_relative_error >= 0.0);
    }

    proptest! {
        #[test]
        fn hyperbolic_identities_large_argument(r in 0.0f64..2500.0) {
            // 0F1(1/2; z^2/4) = cosh z and 0F1(3/2; z^2/4) = sinh z / z
            let zz = 2.0 * r.sqrt();
            let ch = hyp0f1(c(0.5, 0.0), c(r, 0.0)).unwrap().value.re;
            prop_assert!((ch - zz.cosh()).abs() <= 1e-10 * zz.cosh());
            let sh = hyp0f1(c(1.5, 0.0), c(r, 0.0)).unwrap().value.re;
            let expect = if zz > 0.0 { zz.sinh() / zz } else { 1.0 };
            prop_assert!((sh - expect).abs() <= 1e-10 * expect);
            // negative argument: 0F1(1/2; -z^2/4) = cos z
            let co = hyp0f1(c(0.5, 0.0), c(-r, 0.0)).unwrap();
            prop_assert!((co.value.re - zz.cos()).abs() <= 1e-10 * co.max_term_magnitude);
        }
    }
}
