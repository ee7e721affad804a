//! θ ~ Γ(1/2, β): a time-homogeneous problem with a closed-form solution.
//!
//! The filtered process is bang-bang Brownian motion with drift
//! `-√(2β)·sgn(x)` killed elastically at zero at rate `√(2β)`. The value is
//! `b/e` for `x ≤ 0`, `b·e^{x/b-1}` on `(0, b)` and `x` beyond
//! `b = 1/(2√(2β))`.

use num_traits::Float;

use crate::priors::{Prior, PriorKind};
use crate::{Error, Result};

/// Threshold and rate of the gamma problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSolution {
    pub beta: f64,
    pub b: f64,
}

/// Residuals of the free-boundary system at a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbpResiduals {
    /// Max of `|½V'' - √(2β)·sgn(x)·V'|` over interior grid points.
    pub interior: f64,
    /// `|V(b-) - b|`.
    pub value_match: f64,
    /// `|V'(b-) - 1|`.
    pub smooth_pasting: f64,
    /// `|V(0+) - V(0-)|`.
    pub continuity_at_zero: f64,
    /// `|V'(0+) - V'(0-) - 2√(2β)·V(0)|`.
    pub kink: f64,
    /// `|V'(x)|` far to the left; zero when the value stays bounded.
    pub left_tail: f64,
}

impl FbpResiduals {
    pub fn max(&self) -> f64 {
        [
            self.interior,
            self.value_match,
            self.smooth_pasting,
            self.continuity_at_zero,
            self.kink,
            self.left_tail,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn solve_gamma(beta: f64) -> Result<GammaSolution> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain("gamma solver needs beta > 0"));
    }
    Ok(GammaSolution {
        beta,
        b: 1.0 / (2.0 * (2.0 * beta).sqrt()),
    })
}

/// Solves for a prior; only `Γ(1/2, β)` (n = 1) has a solver.
pub fn solve_gamma_prior(prior: &Prior) -> Result<GammaSolution> {
    match *prior.kind() {
        PriorKind::GammaHalf { n: 1, beta } => solve_gamma(beta),
        PriorKind::GammaHalf { .. } => Err(Error::Config(
            "the stopping problem is only solved for n = 1; higher shapes are filter-only",
        )),
        _ => Err(Error::Config("not a gamma prior")),
    }
}

impl GammaSolution {
    fn rate(&self) -> f64 {
        (2.0 * self.beta).sqrt()
    }

    pub fn value(&self, x: f64) -> f64 {
        let b = self.b;
        if x <= 0.0 {
            b / core::f64::consts::E
        } else if x < b {
            b * (x / b - 1.0).exp()
        } else {
            x
        }
    }

    /// `V'(x)`; at `x = 0` the left derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x < self.b {
            (x / self.b - 1.0).exp()
        } else {
            1.0
        }
    }

    /// `V'(0+)`.
    pub fn derivative_right_of_zero(&self) -> f64 {
        (-1.0f64).exp()
    }

    fn second_derivative(&self, x: f64) -> f64 {
        if x > 0.0 && x < self.b {
            (x / self.b - 1.0).exp() / self.b
        } else {
            0.0
        }
    }

    pub fn verify_fbp_residuals(&self) -> FbpResiduals {
        let a = self.rate();
        let b = self.b;
        let mut interior: f64 = 0.0;
        for i in 1..400 {
            let s = f64::from(i) / 400.0;
            for x in [-10.0 * b * s, b * s] {
                let sgn = if x > 0.0 { 1.0 } else { -1.0 };
                let r = 0.5 * self.second_derivative(x) - a * sgn * self.derivative(x);
                interior = interior.max(r.abs());
            }
        }
        let below_b = b * (1.0 - f64::EPSILON);
        FbpResiduals {
            interior,
            value_match: (b * (below_b / b - 1.0).exp() - b).abs(),
            smooth_pasting: ((below_b / b - 1.0).exp() - 1.0).abs(),
            continuity_at_zero: (b * (-1.0f64).exp() - self.value(0.0)).abs(),
            kink: (self.derivative_right_of_zero() - self.derivative(0.0) - 2.0 * a * self.value(0.0))
                .abs(),
            left_tail: self.derivative(-1e6).abs(),
        }
    }
}

/// `V̂(x)` for `θ ~ Γ(1/2, β)`.
pub fn value_gamma(sol: &GammaSolution, x: f64) -> f64 {
    sol.value(x)
}
