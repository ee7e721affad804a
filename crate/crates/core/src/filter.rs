//! Filtering the pinning time from the observed path.
//!
//! Given survival to `t` and `X_t = x`, the posterior of θ has weight
//! `√(r/(r-t)) · exp(-x²/(2(r-t)) + κ²/(2r)) · μ(r)` on `r > t` (a factor not
//! depending on `r` has been dropped). The filtered process has drift
//! `-x·f(t,x)` with `f = E[1/(θ-t) | t < θ, X_t = x]`.
//!
//! Every integral over `r` starts with `r = t + s²`, which turns the
//! `(r-t)^{-1/2}` endpoint into a smooth one.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::numerics::{
    bessel_k_half_seq_scaled, beta_fn, integrate_adaptive, ln_gamma, tricomi_u,
    upper_mills_ratio, QuadratureSpec,
};
use crate::priors::{Prior, PriorKind};
use crate::{Error, Result};

/// Which formula produced a [`DriftEval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Quadrature,
    GammaClosed,
    BetaClosed,
}

/// `f(t,x)` together with the drift `-x·f(t,x)`.
///
/// At `x = 0` with positive prior density at `t` the factor is infinite; the
/// drift is then reported as `0` and `zero_limit` holds `L` such that the drift
/// tends to `-L` from above and `+L` from below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEval {
    pub f_value: f64,
    pub drift: f64,
    pub route: Route,
    pub zero_limit: Option<f64>,
}

impl DriftEval {
    fn finite(f_value: f64, x: f64, route: Route) -> Self {
        Self {
            f_value,
            drift: -x * f_value,
            route,
            zero_limit: None,
        }
    }

    fn singular(limit: f64, route: Route) -> Self {
        Self {
            f_value: f64::INFINITY,
            drift: 0.0,
            route,
            zero_limit: Some(limit),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.f_value.is_infinite()
    }
}

fn filter_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: 1e-11,
        max_subdivisions: 4000,
    }
}

/// Conditional law of θ given `t < θ` and `X_t = x`, started from `X_0 = κ`.
#[derive(Debug, Clone, Copy)]
pub struct PosteriorState<'a> {
    t: f64,
    x: f64,
    kappa: f64,
    prior: &'a Prior,
}

impl<'a> PosteriorState<'a> {
    /// `t = 0` is accepted when `κ = 0` and is read as the `t ↓ 0` limit of
    /// the weight (the prior tilted by `e^{-x²/(2r)}`).
    pub fn new(prior: &'a Prior, t: f64, x: f64, kappa: f64) -> Result<Self> {
        if !(t >= 0.0) || !x.is_finite() || !kappa.is_finite() {
            return Err(Error::Domain("posterior needs t >= 0 and finite levels"));
        }
        if t >= prior.support_upper() {
            return Err(Error::Domain("t must lie before the end of the prior support"));
        }
        if t == 0.0 && kappa != 0.0 {
            return Err(Error::Domain("t = 0 is only meaningful for kappa = 0"));
        }
        Ok(Self { t, x, kappa, prior })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn prior(&self) -> &'a Prior {
        self.prior
    }

    // Largest r-dependent exponent is reached at r = T; subtracting it keeps
    // far-out levels from underflowing both integrals at once.
    fn shift(&self) -> f64 {
        let upper = self.prior.support_upper();
        if upper.is_finite() {
            self.x * self.x / (2.0 * (upper - self.t))
        } else {
            0.0
        }
    }

    fn log_tilt(&self, r: f64, gap: f64) -> f64 {
        let k = if self.kappa == 0.0 {
            0.0
        } else {
            self.kappa * self.kappa / (2.0 * r)
        };
        -self.x * self.x / (2.0 * gap) + k + self.shift()
    }

    /// `∫ h(r, r-t) w(r) dr` for the unnormalised posterior weight `w`.
    fn integrate<H: Fn(f64, f64) -> f64>(&self, h: H) -> Result<f64> {
        let t = self.t;
        let upper = self.prior.support_upper();
        let spec = filter_spec();
        // weight √(r/(r-t)) dr = 2√r ds under r = t + s²
        let lower_piece = |s: f64| {
            if s == 0.0 {
                return 0.0;
            }
            let gap = s * s;
            let r = t + gap;
            let mu = self.prior.density(r);
            if mu == 0.0 {
                return 0.0;
            }
            let e = self.log_tilt(r, gap).exp();
            if e == 0.0 {
                return 0.0;
            }
            2.0 * r.sqrt() * e * mu * h(r, gap)
        };
        let s_top = if upper.is_finite() {
            (0.5 * (upper - t)).sqrt()
        } else {
            f64::INFINITY
        };
        let mut cuts: Vec<f64> = Vec::new();
        let lo = self.prior.support_lower();
        if lo > t {
            cuts.push((lo - t).sqrt());
        }
        let ax = self.x.abs();
        if ax > 0.0 {
            cuts.extend([0.25 * ax, ax, 4.0 * ax]);
        }
        cuts.retain(|&c| c > 0.0 && c < s_top);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.push(s_top);
        let mut total = 0.0;
        let mut a = 0.0;
        for b in cuts {
            total += integrate_adaptive(lower_piece, a, b, &spec)?.value;
            a = b;
        }
        if upper.is_finite() {
            // r = T - v² resolves a singular density at the far end
            let upper_piece = |v: f64| {
                if v == 0.0 {
                    return 0.0;
                }
                let d = v * v;
                let r = upper - d;
                let gap = (upper - t) - d;
                let mu = self.prior.density_below_upper(d);
                if mu == 0.0 {
                    return 0.0;
                }
                let e = self.log_tilt(r, gap).exp();
                (r / gap).sqrt() * 2.0 * v * e * mu * h(r, gap)
            };
            total += integrate_adaptive(upper_piece, 0.0, s_top, &spec)?.value;
        }
        Ok(total)
    }

    fn normalizer(&self) -> Result<f64> {
        let z = self.integrate(|_, _| 1.0)?;
        if !(z > 0.0) {
            return Err(Error::Domain("posterior has no mass at this state"));
        }
        Ok(z)
    }

    /// Normalised posterior density at `r`.
    pub fn density(&self, r: f64) -> Result<f64> {
        if !(r > self.t) || r >= self.prior.support_upper() {
            return Ok(0.0);
        }
        let gap = r - self.t;
        let w = (r / gap).sqrt() * self.log_tilt(r, gap).exp() * self.prior.density(r);
        Ok(w / self.normalizer()?)
    }

    /// Normalised posterior density at `T - d` for a finite support end `T`.
    pub fn density_below_upper(&self, d: f64) -> Result<f64> {
        let upper = self.prior.support_upper();
        let gap = (upper - self.t) - d;
        if !upper.is_finite() || !(d > 0.0 && gap > 0.0) {
            return Ok(0.0);
        }
        let r = upper - d;
        let w = (r / gap).sqrt()
            * self.log_tilt(r, gap).exp()
            * self.prior.density_below_upper(d);
        Ok(w / self.normalizer()?)
    }

    /// Posterior mean of θ.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.integrate(|r, _| r)? / self.normalizer()?)
    }
}

/// `f(t,x)` by quadrature for any prior and starting level.
pub fn f_general(state: &PosteriorState) -> Result<DriftEval> {
    let (t, x) = (state.t, state.x);
    let z = state.normalizer()?;
    if x == 0.0 {
        let mu_t = state.prior.density(t);
        if mu_t > 0.0 {
            let k = if state.kappa == 0.0 {
                1.0
            } else {
                (state.kappa * state.kappa / (2.0 * t)).exp()
            };
            // shift() vanishes at x = 0
            let limit = (2.0 * PI * t).sqrt() * mu_t * k / z;
            return Ok(DriftEval::singular(limit, Route::Quadrature));
        }
    }
    let num = state.integrate(|_, gap| 1.0 / gap)?;
    Ok(DriftEval::finite(num / z, x, Route::Quadrature))
}

/// `f(t,x)` preferring a closed form whenever one applies.
pub fn drift_factor(state: &PosteriorState) -> Result<DriftEval> {
    if state.kappa == 0.0 {
        match *state.prior.kind() {
            PriorKind::GammaHalf { n, beta } => return f_gamma(n, beta, state.t, state.x),
            PriorKind::BetaHalf { beta } => return f_beta(beta, state.t, state.x),
            PriorKind::Tabulated(_) => {}
        }
    }
    f_general(state)
}

/// `Q(t, 0+)` for the `Γ(n - 1/2, β)` prior.
fn gamma_q_at_zero(n: u32, beta: f64, t: f64) -> f64 {
    let n = n as i32;
    let tb = 2.0 * beta * t;
    // both sides carry (2βt)^k; work in logs to keep large n tame
    let mut logs = Vec::with_capacity(n as usize);
    for k in 0..n {
        let kf = f64::from(k);
        let nu = f64::from(n - k) - 0.5;
        let log_tb = if k == 0 { 0.0 } else { kf * tb.ln() };
        logs.push(ln_binom(n - 1, k) + log_tb + ln_gamma(nu) + (nu - 1.0) * 2.0.ln());
    }
    let top = if n == 1 {
        0.0
    } else {
        f64::from(n - 1) * tb.ln()
    } + 0.5 * (0.5 * PI).ln();
    (top - log_sum_exp(&logs)).exp()
}

fn ln_binom(n: i32, k: i32) -> f64 {
    ln_gamma(f64::from(n + 1)) - ln_gamma(f64::from(k + 1)) - ln_gamma(f64::from(n - k + 1))
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Bessel-ratio factor `Q(t,x) ∈ (0, 1]` of the gamma filter.
pub fn gamma_q(n: u32, beta: f64, t: f64, x: f64) -> Result<f64> {
    if n == 0 || !(beta > 0.0) || !(t >= 0.0) {
        return Err(Error::Domain("gamma filter needs n >= 1, beta > 0, t >= 0"));
    }
    if x == 0.0 {
        return Ok(if t == 0.0 && n > 1 { 0.0 } else { gamma_q_at_zero(n, beta, t) });
    }
    if n == 1 {
        return Ok(1.0);
    }
    let a = (2.0 * beta).sqrt();
    let y = a * x.abs();
    let ks = bessel_k_half_seq_scaled((n - 1) as usize, y)?;
    let n = n as i32;
    let step = (t * a / x.abs()).ln();
    let kmax = if t == 0.0 { 0 } else { n - 1 };
    let mut num = Vec::with_capacity(n as usize);
    let mut den = Vec::with_capacity(n as usize);
    for k in 0..=kmax {
        let base = ln_binom(n - 1, k) + if k == 0 { 0.0 } else { f64::from(k) * step };
        // K_{n-k-3/2} with K_{-1/2} = K_{1/2}
        let m_num = if k <= n - 2 { (n - k - 2) as usize } else { 0 };
        let m_den = (n - k - 1) as usize;
        num.push(base + ks[m_num].ln());
        den.push(base + ks[m_den].ln());
    }
    Ok((log_sum_exp(&num) - log_sum_exp(&den)).exp())
}

/// Closed-form `f` for θ ~ Γ(n - 1/2, β) started at zero.
pub fn f_gamma(n: u32, beta: f64, t: f64, x: f64) -> Result<DriftEval> {
    let a = (2.0 * beta).sqrt();
    let q = gamma_q(n, beta, t, x)?;
    if x == 0.0 {
        if q > 0.0 {
            return Ok(DriftEval::singular(a * q, Route::GammaClosed));
        }
        // μ(0) = 0 for n ≥ 2: the factor is finite at the origin
        let prior = Prior::gamma_half(n, beta)?;
        let state = PosteriorState::new(&prior, t, 0.0, 0.0)?;
        return f_general(&state);
    }
    Ok(DriftEval::finite(a * q / x.abs(), x, Route::GammaClosed))
}

/// `lim_{z→0} |z|·g(z) = √2·Γ(β+1/2)/Γ(β)`.
pub fn beta_zg_limit(beta: f64) -> f64 {
    2.0.sqrt() * (ln_gamma(beta + 0.5) - ln_gamma(beta)).exp()
}

/// `|z|·g(z)`, finite and positive including at `z = 0`.
pub fn beta_zg(beta: f64, z: f64) -> Result<f64> {
    if !(beta > 0.0) || !z.is_finite() {
        return Err(Error::Domain("beta filter needs beta > 0 and finite z"));
    }
    let z = z.abs();
    if z == 0.0 {
        return Ok(beta_zg_limit(beta));
    }
    if beta == 0.5 {
        return Ok(1.0 / upper_mills_ratio(z));
    }
    let y = 0.5 * z * z;
    Ok(z * tricomi_u(beta, 1.5, y)? / tricomi_u(beta, 0.5, y)?)
}

/// `g(z) = U(β, 3/2, z²/2) / U(β, 1/2, z²/2)`; infinite at `z = 0`.
pub fn beta_g(beta: f64, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(beta_zg(beta, z)? / z.abs())
}

/// Closed-form `f` for θ ~ B(1/2, β) started at zero.
pub fn f_beta(beta: f64, t: f64, x: f64) -> Result<DriftEval> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain("beta filter needs 0 <= t < 1"));
    }
    let h = (1.0 - t).sqrt();
    if x == 0.0 {
        return Ok(DriftEval::singular(beta_zg_limit(beta) / h, Route::BetaClosed));
    }
    let z = x / h;
    let f = beta_zg(beta, z)? / (z.abs() * (1.0 - t));
    Ok(DriftEval::finite(f, x, Route::BetaClosed))
}

/// Elastic killing rate `q(t)` at zero.
///
/// Closed forms for the two parametric families; quadrature otherwise.
pub fn killing_rate(prior: &Prior, t: f64) -> Result<f64> {
    if !(t >= 0.0) || t >= prior.support_upper() {
        return Err(Error::Domain("killing rate needs t inside the prior support"));
    }
    match *prior.kind() {
        PriorKind::GammaHalf { n, beta } => Ok((2.0 * beta).sqrt() * gamma_q(n, beta, t, 0.0)?),
        PriorKind::BetaHalf { beta } => Ok((2.0 * PI / (1.0 - t)).sqrt() / beta_fn(0.5, beta)),
        PriorKind::Tabulated(_) => killing_rate_quadrature(prior, t),
    }
}

/// `q(t) = μ(t) / ((2πt)^{-1/2} ∫_t^T √(r/(r-t)) μ(r) dr)` by quadrature.
pub fn killing_rate_quadrature(prior: &Prior, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain("quadrature killing rate needs t > 0"));
    }
    let state = PosteriorState::new(prior, t, 0.0, 0.0)?;
    Ok((2.0 * PI * t).sqrt() * prior.density(t) / state.normalizer()?)
}
