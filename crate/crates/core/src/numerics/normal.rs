use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_traits::Float;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function `Φ(x)`.
///
/// Written through `erfc` on whichever side avoids cancellation, so the
/// lower tail keeps full relative precision and `Φ(x) + Φ(-x) = 1` holds to
/// rounding.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// Upper tail `1 - Φ(x)`, accurate in relative terms for large positive `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 - Φ(z)) / φ(z)` for `z ≥ 0`.
///
/// Uses the continued fraction `1/(z + 1/(z + 2/(z + ...)))` once the direct
/// quotient would underflow.
pub fn upper_mills_ratio(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 8.0 {
        return normal_sf(z) / normal_pdf(z);
    }
    // Backward evaluation of the continued fraction; 80 terms is far beyond
    // what z >= 8 needs for full double precision.
    let mut tail = z;
    for k in (1..=80).rev() {
        tail = z + k as f64 / tail;
    }
    1.0 / tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_abs_diff_eq!(normal_cdf(40.0), 1.0, epsilon = 1e-15);
        // mpmath, 30 digits
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-15);
        assert_abs_diff_eq!(normal_cdf(-1.0), 0.158_655_253_931_457_05, epsilon = 1e-15);
    }

    #[test]
    fn symmetry_and_monotonicity_on_grid() {
        let mut prev = 0.0;
        for i in 0..1000 {
            let x = -10.0 + 20.0 * i as f64 / 999.0;
            let p = normal_cdf(x);
            assert!((p + normal_cdf(-x) - 1.0).abs() <= 1e-15, "x = {x}");
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn mills_ratio_branches_agree() {
        // At the switch point the continued fraction must match the quotient.
        let direct = normal_sf(8.0) / normal_pdf(8.0);
        let cf = {
            let mut tail = 8.0;
            for k in (1..=80).rev() {
                tail = 8.0 + k as f64 / tail;
            }
            1.0 / tail
        };
        assert!((direct - cf).abs() / cf < 1e-13);
        // Asymptotically m(z) ~ 1/z.
        assert!((upper_mills_ratio(1e4) * 1e4 - 1.0).abs() < 1e-7);
    }
}
