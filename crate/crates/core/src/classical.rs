//! Known pinning time: the bridge pinned at a deterministic `T`.
//!
//! The optimal rule stops the first time `X_t ≥ B√(T-t)`, where `B` is the
//! positive root of `√(2π)(1-B²) e^{B²/2} Φ(B) = B`.

use core::f64::consts::PI;
use core::sync::atomic::{AtomicU64, Ordering};

use num_traits::Float;

use crate::numerics::{find_root_monotone, normal_cdf, upper_mills_ratio, RootBracket};
use crate::{Error, Result};

// 0 means "not computed yet"; B itself is never 0.
static B_BITS: AtomicU64 = AtomicU64::new(0);

/// Left minus right side of the defining equation for `B`.
pub fn b_residual(b: f64) -> f64 {
    (2.0 * PI).sqrt() * (1.0 - b * b) * (0.5 * b * b).exp() * normal_cdf(b) - b
}

/// The boundary constant `B ≈ 0.839924`, computed once and cached.
pub fn solve_b() -> f64 {
    let cached = B_BITS.load(Ordering::Relaxed);
    if cached != 0 {
        return f64::from_bits(cached);
    }
    // residual is positive at 0.5 and negative at 1.0
    let bracket = RootBracket::new(0.5, 1.0, 1e-15).unwrap();
    let b = find_root_monotone(b_residual, &bracket).unwrap();
    B_BITS.store(b.to_bits(), Ordering::Relaxed);
    b
}

/// Shepp's solution for a bridge pinned at `t_pin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSolution {
    pub t_pin: f64,
    pub b: f64,
}

impl ClassicalSolution {
    pub fn new(t_pin: f64) -> Result<Self> {
        if !(t_pin > 0.0 && t_pin.is_finite()) {
            return Err(Error::Domain("pinning time must be positive and finite"));
        }
        Ok(Self { t_pin, b: solve_b() })
    }

    /// Stopping boundary `B√(T-t)`.
    pub fn boundary(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_pin).contains(&t) {
            return Err(Error::Domain("boundary needs 0 <= t <= T"));
        }
        Ok(self.b * (self.t_pin - t).sqrt())
    }

    /// Value `V^T(t,x)`.
    ///
    /// At `t = T` the bridge is pinned and the value is `max(x, 0)`, which is
    /// `0` on the only reachable level.
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        if !(0.0..=self.t_pin).contains(&t) || !x.is_finite() {
            return Err(Error::Domain("value needs 0 <= t <= T and finite x"));
        }
        let tau = self.t_pin - t;
        if tau == 0.0 {
            return Ok(x.max(0.0));
        }
        let root = tau.sqrt();
        if x >= self.b * root {
            return Ok(x);
        }
        let z = x / root;
        // √(2πτ) e^{z²/2} Φ(z) = √τ Φ(z)/φ(z) = √τ·m(-z)
        let ratio = if z < 0.0 {
            upper_mills_ratio(-z)
        } else {
            (2.0 * PI).sqrt() * (0.5 * z * z).exp() * normal_cdf(z)
        };
        Ok(root * (1.0 - self.b * self.b) * ratio)
    }
}

/// `V^T(t,x)` without building a [`ClassicalSolution`] first.
pub fn value_classical(t_pin: f64, t: f64, x: f64) -> Result<f64> {
    ClassicalSolution::new(t_pin)?.value(t, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_constant() {
        let b = solve_b();
        assert!((b - 0.839_924).abs() < 1e-6);
        assert!(b_residual(b).abs() <= 1e-10);
        assert!(b_residual(0.8) > 0.0 && b_residual(0.9) < 0.0);
        assert_eq!(solve_b(), b);
    }

    #[test]
    fn value_at_origin() {
        let v = value_classical(1.0, 0.0, 0.0).unwrap();
        let b = solve_b();
        assert!((v - (2.0 * PI).sqrt() * (1.0 - b * b) / 2.0).abs() < 1e-15);
        assert!((v - 0.369_136_380_725_361).abs() < 1e-9);
    }

    #[test]
    fn smooth_fit_at_boundary() {
        let sol = ClassicalSolution::new(1.0).unwrap();
        for t in [0.0, 0.3, 0.9] {
            let bd = sol.boundary(t).unwrap();
            let inside = sol.value(t, bd * (1.0 - 1e-13)).unwrap();
            assert!((inside - bd).abs() < 1e-10, "t={t}");
            let h = 1e-6;
            let slope = (sol.value(t, bd - h).unwrap() - sol.value(t, bd - 2.0 * h).unwrap()) / h;
            assert!((slope - 1.0).abs() < 1e-4, "t={t}: {slope}");
        }
    }

    #[test]
    fn stopping_region_and_dominance() {
        let sol = ClassicalSolution::new(2.0).unwrap();
        for i in 0..40 {
            let t = 2.0 * f64::from(i) / 40.0;
            for j in 0..60 {
                let x = -3.0 + 0.1 * f64::from(j);
                let v = sol.value(t, x).unwrap();
                assert!(v >= x - 1e-15);
                if x >= sol.boundary(t).unwrap() {
                    assert_eq!(v, x);
                }
            }
        }
    }

    #[test]
    fn less_time_is_worth_less_below_zero() {
        let sol = ClassicalSolution::new(1.0).unwrap();
        for j in 0..30 {
            let x = -3.0 + 0.1 * f64::from(j);
            let mut prev = f64::INFINITY;
            for i in 0..=50 {
                let v = sol.value(f64::from(i) / 50.0, x).unwrap();
                assert!(v <= prev + 1e-15, "x={x}");
                prev = v;
            }
        }
    }

    #[test]
    fn brownian_scaling() {
        for &cap in &[0.5, 2.0, 7.0] {
            let big = ClassicalSolution::new(cap).unwrap();
            let unit = ClassicalSolution::new(1.0).unwrap();
            for i in 0..20 {
                let t = cap * f64::from(i) / 20.0;
                for j in 0..20 {
                    let x = -2.0 + 0.2 * f64::from(j);
                    let lhs = big.value(t, x).unwrap();
                    let rhs = cap.sqrt() * unit.value(t / cap, x / cap.sqrt()).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "T={cap} t={t} x={x}");
                }
            }
        }
    }

    #[test]
    fn pinned_endpoint() {
        assert_eq!(value_classical(1.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(value_classical(1.0, 1.5, 0.0).is_err());
    }
}
