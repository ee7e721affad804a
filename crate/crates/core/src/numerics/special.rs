use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_traits::Float;

use super::quad::{integrate_adaptive, QuadratureSpec};
use crate::{Error, Result};

pub fn gamma_fn(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Euler beta function `B(a, b)` for positive arguments.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// `e^x K_{m+1/2}(x)` for `m = 0..=max_order`.
///
/// Seeded with `K_{1/2}(x) = √(π/(2x)) e^{-x}`, `K_{3/2} = K_{1/2}(1 + 1/x)` and
/// run upward through `K_{ν+1} = K_{ν-1} + (2ν/x) K_ν`, which is the stable
/// direction for the second-kind function.
pub fn bessel_k_half_seq_scaled(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain("Bessel K needs x > 0"));
    }
    let mut out = Vec::with_capacity(max_order + 1);
    let k0 = (FRAC_PI_2 / x).sqrt();
    out.push(k0);
    if max_order >= 1 {
        out.push(k0 * (1.0 + 1.0 / x));
    }
    for m in 2..=max_order {
        let nu = (m - 1) as f64 + 0.5;
        let next = out[m - 2] + 2.0 * nu / x * out[m - 1];
        out.push(next);
    }
    Ok(out)
}

/// `e^x K_{m+1/2}(x)`; the exponential scaling keeps large `x` representable.
pub fn bessel_k_half_scaled(order_index: usize, x: f64) -> Result<f64> {
    Ok(bessel_k_half_seq_scaled(order_index, x)?[order_index])
}

/// Modified Bessel function of the second kind `K_{m+1/2}(x)`.
///
/// Negative half-integer orders follow from `K_{-ν} = K_ν`.
pub fn bessel_k_half(order_index: usize, x: f64) -> Result<f64> {
    Ok(bessel_k_half_scaled(order_index, x)? * (-x).exp())
}

/// Tricomi's confluent hypergeometric function
/// `U(p, q, y) = Γ(p)^{-1} ∫_0^∞ u^{p-1} (1+u)^{q-p-1} e^{-yu} du`, `p, y > 0`.
///
/// The range is split at `u = 1`. On `(0, 1)` the `u^{p-1}` singularity
/// (`p < 1`) is handled near zero by subtracting the integrand's value at
/// zero and adding back `δ^p/p` analytically. On `(1, ∞)` the substitution `u = e^s`
/// turns the algebraic tail into an exponentially decaying one; the cut-off
/// sits where `y·u` is large enough that the remainder is below rounding.
pub fn tricomi_u(p: f64, q: f64, y: f64) -> Result<f64> {
    if !(p > 0.0) || !(y > 0.0) || !p.is_finite() || !y.is_finite() || !q.is_finite() {
        return Err(Error::Domain("Tricomi U needs p > 0 and y > 0"));
    }
    let spec = QuadratureSpec::relative(1e-13);
    let c = q - p - 1.0;
    // log of (1+u)^c e^{-yu}
    let log_rest = |u: f64| c * u.ln_1p() - y * u;

    let head = if p < 1.0 {
        // Subtract only where e^{-yu} is still O(1); beyond that the
        // subtraction would cancel against the analytic part.
        let split = (1.0 / (1.0 + y + c.abs())).min(1.0);
        let singular = |u: f64| {
            if u == 0.0 {
                0.0
            } else {
                u.powf(p - 1.0) * log_rest(u).exp_m1()
            }
        };
        // the correction is small next to δ^p/p, so measure its error there
        let near_spec = QuadratureSpec {
            abs_tol: 1e-14 * split.powf(p) / p,
            ..spec
        };
        let near = integrate_adaptive(singular, 0.0, split, &near_spec)?.value;
        let far = if split < 1.0 {
            let regular = |u: f64| (((p - 1.0) * u.ln()) + log_rest(u)).exp();
            integrate_adaptive(regular, split, 1.0, &spec)?.value
        } else {
            0.0
        };
        (near + far) / gamma_fn(p) + split.powf(p) / gamma_fn(p + 1.0)
    } else {
        let regular = |u: f64| (((p - 1.0) * u.ln()) + log_rest(u)).exp();
        integrate_adaptive(regular, 0.0, 1.0, &spec)?.value / gamma_fn(p)
    };

    let cutoff = 60.0 + 4.0 * q.abs() + 2.0 * p;
    let s_max = (cutoff / y).ln().max(0.0);
    let tail = if s_max > 0.0 {
        let integrand = |s: f64| {
            let u = s.exp();
            (p * s + log_rest(u)).exp()
        };
        integrate_adaptive(integrand, 0.0, s_max, &spec)?.value / gamma_fn(p)
    } else {
        0.0
    };
    Ok(head + tail)
}
