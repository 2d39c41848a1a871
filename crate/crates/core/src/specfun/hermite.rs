use num_complex::Complex64;

/// Highest order accepted by [`hermite`].
pub const MAX_HERMITE_ORDER: usize = 64;

/// Physicists' Hermite polynomial `H_k(z)` by the three-term recurrence
/// `H_{k+1} = 2z H_k - 2k H_{k-1}`.
///
/// # Panics
/// If `k > MAX_HERMITE_ORDER`.
pub fn hermite(k: usize, z: Complex64) -> Complex64 {
    assert!(
        k <= MAX_HERMITE_ORDER,
        "hermite order {k} exceeds {MAX_HERMITE_ORDER}"
    );
    let mut prev = Complex64::new(1.0, 0.0);
    if k == 0 {
        return prev;
    }
    let mut cur = 2.0 * z;
    for j in 1..k {
        let next = 2.0 * z * cur - 2.0 * j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn low_orders() {
        assert_eq!(hermite(0, c(3.7, -1.0)), c(1.0, 0.0));
        assert_eq!(hermite(1, c(3.0, 0.0)), c(6.0, 0.0));
        // H3(z) = 8 z^3 - 12 z
        assert_eq!(hermite(3, c(1.0, 0.0)), c(-4.0, 0.0));
        let z = c(0.3, 1.2);
        let h3 = 8.0 * z * z * z - 12.0 * z;
        assert!((hermite(3, z) - h3).norm() < 1e-13);
        // H4(z) = 16 z^4 - 48 z^2 + 12
        let h4 = 16.0 * z.powi(4) - 48.0 * z * z + 12.0;
        assert!((hermite(4, z) - h4).norm() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn order_cap() {
        hermite(65, c(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn derivative_matches_lower_order(k in 1usize..12, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let z = c(re, im);
            let h = 1e-5;
            let fd = (hermite(k, z + h) - hermite(k, z - h)) / (2.0 * h);
            let exact = 2.0 * k as f64 * hermite(k - 1, z);
            let scale = exact.norm().max(1.0);
            prop_assert!((fd - exact).norm() <= 1e-6 * scale, "k={k} z={z}: {fd} vs {exact}");
        }
    }
}
