//! θ ~ B(1/2, β): square-root boundary `A√(1-t)` from a free-boundary ODE.
//!
//! In `z = x/√(1-t)` the value is `√(1-t)·u(z)` where
//! `u'' + h(z) u' - u = 0` off the origin, `h(z) = z(1 - 2g(z))`, with an
//! elastic kink `u'(0+) - u'(0-) = α u(0)`, `α = 2√(2π)/B(1/2, β)`, and smooth
//! pasting `u(A) = A`, `u'(A) = 1`.
//!
//! `φ` (decreasing, `~ 1/z` at infinity) is integrated backward from `z_max`,
//! where the unwanted `e^{z²/2}` mode dies out. `ψ` is the `C¹` continuation
//! through the origin of the solution that vanishes at `-∞`, i.e. it starts
//! from `ψ(0) = 1`, `ψ'(0) = -φ'(0+)`; since `h < 0` on `z > 0` it is
//! increasing and convex.

use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;

use num_traits::Float;

use crate::filter::{beta_zg, beta_zg_limit};
use crate::numerics::{beta_fn, find_root_monotone, ode_integrate, OdeOptions, RootBracket};
use crate::{Error, Result};

/// Numerical settings for the fundamental solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Below this `z` the drift uses its one-sided limit at zero.
    pub epsilon: f64,
    pub z_max: f64,
    /// Number of Chebyshev intervals carrying dense output.
    pub nodes: usize,
    pub ode: OdeOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            z_max: 8.0,
            nodes: 800,
            ode: OdeOptions::default(),
        }
    }
}

/// `h(z) = z - 2|z|g(z)·sgn(z)`; odd in `z`.
pub fn drift_coefficient(beta: f64, z: f64, epsilon: f64) -> Result<f64> {
    let a = z.abs();
    let zg = if a < epsilon {
        beta_zg_limit(beta)
    } else {
        beta_zg(beta, a)?
    };
    Ok(z - 2.0 * zg * if z < 0.0 { -1.0 } else { 1.0 })
}

/// One solution of the ODE on `[0, z_max]`, stored at nodes with `(u, u', u'')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    z: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    d2u: Vec<f64>,
}

impl Solution {
    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    /// `(u, u', u'')` at `z` by quintic Hermite interpolation.
    pub fn eval(&self, z: f64) -> Result<[f64; 3]> {
        let (lo, hi) = (self.z[0], *self.z.last().unwrap());
        if !(z >= lo && z <= hi) {
            return Err(Error::Domain("evaluation outside the solved range"));
        }
        let i = self.z.partition_point(|&n| n <= z).clamp(1, self.z.len() - 1) - 1;
        let h = self.z[i + 1] - self.z[i];
        let s = (z - self.z[i]) / h;
        let (p0, p1) = (self.u[i], self.u[i + 1]);
        let (d0, d1) = (self.du[i] * h, self.du[i + 1] * h);
        let (a0, a1) = (self.d2u[i] * h * h, self.d2u[i + 1] * h * h);
        let c = [
            p0,
            d0,
            0.5 * a0,
            -10.0 * p0 - 6.0 * d0 - 1.5 * a0 + 10.0 * p1 - 4.0 * d1 + 0.5 * a1,
            15.0 * p0 + 8.0 * d0 + 1.5 * a0 - 15.0 * p1 + 7.0 * d1 - a1,
            -6.0 * p0 - 3.0 * d0 - 0.5 * a0 + 6.0 * p1 - 3.0 * d1 + 0.5 * a1,
        ];
        let v = ((((c[5] * s + c[4]) * s + c[3]) * s + c[2]) * s + c[1]) * s + c[0];
        let dv = (((5.0 * c[5] * s + 4.0 * c[4]) * s + 3.0 * c[3]) * s + 2.0 * c[2]) * s + c[1];
        let d2v = ((20.0 * c[5] * s + 12.0 * c[4]) * s + 6.0 * c[3]) * s + 2.0 * c[2];
        Ok([v, dv / h, d2v / (h * h)])
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        Ok(self.eval(z)?[0])
    }

    pub fn derivative(&self, z: f64) -> Result<f64> {
        Ok(self.eval(z)?[1])
    }

    fn at_zero(&self) -> (f64, f64) {
        (self.u[0], self.du[0])
    }
}

/// Increasing and decreasing positive solutions, both equal to 1 at `0+`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalPair {
    pub beta: f64,
    pub psi: Solution,
    pub phi: Solution,
    pub options: SolverOptions,
}

fn chebyshev_nodes(z_max: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| 0.5 * z_max * (1.0 - (PI * i as f64 / n as f64).cos()))
        .collect()
}

fn integrate_solution(
    beta: f64,
    opts: &SolverOptions,
    start: f64,
    state: [f64; 2],
    nodes: &[f64],
) -> Result<Solution> {
    let failure: Cell<Option<Error>> = Cell::new(None);
    let eps = opts.epsilon;
    let rhs = |z: f64, y: &[f64; 2]| match drift_coefficient(beta, z, eps) {
        Ok(h) => [y[1], y[0] - h * y[1]],
        Err(e) => {
            failure.set(Some(e));
            [f64::NAN; 2]
        }
    };
    let end = *nodes.last().unwrap();
    let traj = ode_integrate(rhs, start, end, state, nodes, &opts.ode);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let traj = traj?;
    let mut pts: Vec<(f64, [f64; 2])> = traj.z.into_iter().zip(traj.states).collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pts.dedup_by(|a, b| a.0 == b.0);
    let mut sol = Solution {
        z: Vec::with_capacity(pts.len()),
        u: Vec::with_capacity(pts.len()),
        du: Vec::with_capacity(pts.len()),
        d2u: Vec::with_capacity(pts.len()),
    };
    for (z, [u, du]) in pts {
        let h = drift_coefficient(beta, z, eps)?;
        sol.z.push(z);
        sol.u.push(u);
        sol.du.push(du);
        sol.d2u.push(u - h * du);
    }
    Ok(sol)
}

fn scale(sol: &mut Solution, k: f64) {
    for v in sol.u.iter_mut().chain(&mut sol.du).chain(&mut sol.d2u) {
        *v *= k;
    }
}

/// Builds `ψ` and `φ` for `B(1/2, β)`.
pub fn compute_fundamental_pair(beta: f64, opts: &SolverOptions) -> Result<FundamentalPair> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain("beta solver needs beta > 0"));
    }
    if !(opts.epsilon > 0.0 && opts.epsilon < 1e-2) || !(opts.z_max >= 4.0) || opts.nodes < 16 {
        return Err(Error::Config("need 0 < epsilon < 1e-2, z_max >= 4 and at least 16 nodes"));
    }
    let grid = chebyshev_nodes(opts.z_max, opts.nodes);
    // φ ~ 1/z at infinity, so φ'/φ = -1/z there
    let down: Vec<f64> = grid.iter().rev().skip(1).cloned().collect();
    let mut phi = integrate_solution(beta, opts, opts.z_max, [1.0, -1.0 / opts.z_max], &down)?;
    let (phi0, _) = phi.at_zero();
    if !(phi0 > 0.0) {
        return Err(Error::Config("phi lost positivity; try a larger z_max"));
    }
    scale(&mut phi, 1.0 / phi0);
    let (_, dphi0) = phi.at_zero();
    let up: Vec<f64> = grid[1..].to_vec();
    let psi = integrate_solution(beta, opts, 0.0, [1.0, -dphi0], &up)?;
    let ok = phi.u.iter().all(|&v| v > 0.0)
        && phi.du.iter().all(|&v| v < 0.0)
        && psi.u.iter().all(|&v| v > 0.0)
        && psi.du.iter().all(|&v| v > 0.0);
    if !ok {
        return Err(Error::Config(
            "fundamental solutions are not monotone; try a larger z_max or smaller epsilon",
        ));
    }
    Ok(FundamentalPair {
        beta,
        psi,
        phi,
        options: *opts,
    })
}

impl FundamentalPair {
    /// `φψ' - φ'ψ` at `z`.
    pub fn wronskian(&self, z: f64) -> Result<f64> {
        let [p, dp, _] = self.psi.eval(z)?;
        let [f, df, _] = self.phi.eval(z)?;
        Ok(f * dp - df * p)
    }

    pub fn psi_prime_zero(&self) -> f64 {
        self.psi.du[0]
    }

    pub fn phi_prime_zero(&self) -> f64 {
        self.phi.du[0]
    }

    /// `p(z) = (zψ' - ψ)/(zφ' - φ)`, decreasing from `p(0+) = 1`.
    pub fn p(&self, z: f64) -> Result<f64> {
        let [p, dp, _] = self.psi.eval(z)?;
        let [f, df, _] = self.phi.eval(z)?;
        Ok((z * dp - p) / (z * df - f))
    }
}

/// Kink strength `α = 2√(2π)/B(1/2, β)`.
pub fn kink_alpha(beta: f64) -> f64 {
    2.0 * (2.0 * PI).sqrt() / beta_fn(0.5, beta)
}

/// Solved beta problem: `u = (C+D)φ(-z)` on `z ≤ 0`, `Cψ + Dφ` on `(0, A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaSolution {
    pub beta: f64,
    pub a: f64,
    pub c: f64,
    pub d: f64,
    pub pair: FundamentalPair,
}

/// Residuals of the transformed free-boundary system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaResiduals {
    /// `|p(A) - K|`.
    pub boundary_equation: f64,
    /// `|u'(0+) - u'(0-) - α u(0)|`.
    pub kink: f64,
    /// `|u(0+) - u(0-)|`.
    pub continuity: f64,
    /// `|u(A) - A|`.
    pub value_match: f64,
    /// `|u'(A) - 1|`.
    pub smooth_pasting: f64,
    /// Max of `|u'' + h u' - u|` at off-node points of `(ε, A)`.
    pub interior: f64,
}

pub fn solve_a(beta: f64) -> Result<BetaSolution> {
    solve_a_with(beta, &SolverOptions::default())
}

pub fn solve_a_with(beta: f64, opts: &SolverOptions) -> Result<BetaSolution> {
    let pair = compute_fundamental_pair(beta, opts)?;
    let alpha = kink_alpha(beta);
    let dphi0 = pair.phi_prime_zero();
    let dpsi0 = pair.psi_prime_zero();
    let k = (dpsi0 + dphi0 - alpha) / (2.0 * dphi0 - alpha);
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::Internal("boundary equation constant outside (0, 1]"));
    }
    let residual = |z: f64| pair.p(z).map(|p| p - k).unwrap_or(f64::NAN);
    let mut hi = 0.5f64.min(opts.z_max);
    while residual(hi) > 0.0 {
        if hi >= opts.z_max {
            return Err(Error::Config("no boundary below z_max; increase z_max"));
        }
        hi = (2.0 * hi).min(opts.z_max);
    }
    let lo = opts.epsilon;
    let a = find_root_monotone(residual, &RootBracket::new(lo, hi, 1e-14)?)?;
    let [ps, dps, _] = pair.psi.eval(a)?;
    let [ph, dph, _] = pair.phi.eval(a)?;
    let det = ps * dph - ph * dps;
    let c = (a * dph - ph) / det;
    let d = (ps - a * dps) / det;
    Ok(BetaSolution { beta, a, c, d, pair })
}

impl BetaSolution {
    /// `C₋ = C + D`, the coefficient of `φ(-z)` on the negative axis.
    pub fn c_minus(&self) -> f64 {
        self.c + self.d
    }

    /// `(u, u')` in similarity variables.
    pub fn u(&self, z: f64) -> Result<(f64, f64)> {
        if z >= self.a {
            return Ok((z, 1.0));
        }
        let z_max = self.pair.options.z_max;
        if z <= 0.0 {
            let w = -z;
            let cm = self.c_minus();
            if w <= z_max {
                let [f, df, _] = self.pair.phi.eval(w)?;
                return Ok((cm * f, -cm * df));
            }
            // beyond the grid φ follows its 1/z tail
            let f_end = self.pair.phi.value(z_max)?;
            return Ok((cm * f_end * z_max / w, cm * f_end * z_max / (w * w)));
        }
        let [p, dp, _] = self.pair.psi.eval(z)?;
        let [f, df, _] = self.pair.phi.eval(z)?;
        Ok((self.c * p + self.d * f, self.c * dp + self.d * df))
    }

    fn u_second(&self, z: f64) -> Result<f64> {
        let [_, _, d2p] = self.pair.psi.eval(z)?;
        let [_, _, d2f] = self.pair.phi.eval(z)?;
        Ok(self.c * d2p + self.d * d2f)
    }

    /// `V(t,x) = √(1-t)·u(x/√(1-t))`, with `V(1, 0) = 0`.
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        if t == 1.0 && x == 0.0 {
            return Ok(0.0);
        }
        if !(0.0..1.0).contains(&t) || !x.is_finite() {
            return Err(Error::Domain("beta value needs 0 <= t < 1"));
        }
        let h = (1.0 - t).sqrt();
        Ok(h * self.u(x / h)?.0)
    }

    /// `b(t) = A√(1-t)`.
    pub fn boundary(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain("boundary needs 0 <= t <= 1"));
        }
        Ok(self.a * (1.0 - t).sqrt())
    }

    pub fn residuals(&self) -> Result<BetaResiduals> {
        let alpha = kink_alpha(self.beta);
        let pair = &self.pair;
        let k = (pair.psi_prime_zero() + pair.phi_prime_zero() - alpha)
            / (2.0 * pair.phi_prime_zero() - alpha);
        let u_plus = self.c + self.d;
        let du_plus = self.c * pair.psi_prime_zero() + self.d * pair.phi_prime_zero();
        let u_minus = self.c_minus();
        let du_minus = -self.c_minus() * pair.phi_prime_zero();
        let [ps, dps, _] = pair.psi.eval(self.a)?;
        let [ph, dph, _] = pair.phi.eval(self.a)?;
        let mut interior: f64 = 0.0;
        let eps = pair.options.epsilon;
        for i in 0..500 {
            // irrational offsets keep the probes off the stored nodes
            let z = eps + (self.a - eps) * (i as f64 + 0.381_966) / 500.0;
            let (u, du) = self.u(z)?;
            let h = drift_coefficient(self.beta, z, eps)?;
            interior = interior.max((self.u_second(z)? + h * du - u).abs());
        }
        Ok(BetaResiduals {
            boundary_equation: (pair.p(self.a)? - k).abs(),
            kink: (du_plus - du_minus - alpha * u_plus).abs(),
            continuity: (u_plus - u_minus).abs(),
            value_match: (self.c * ps + self.d * ph - self.a).abs(),
            smooth_pasting: (self.c * dps + self.d * dph - 1.0).abs(),
            interior,
        })
    }
}

pub fn value_beta(sol: &BetaSolution, t: f64, x: f64) -> Result<f64> {
    sol.value(t, x)
}

pub fn boundary_beta(sol: &BetaSolution, t: f64) -> Result<f64> {
    sol.boundary(t)
}

/// Re-solves with `z_max` doubled and `ε` halved; returns `|ΔA|`.
pub fn convergence_gap(beta: f64, opts: &SolverOptions) -> Result<f64> {
    let base = solve_a_with(beta, opts)?;
    let finer = SolverOptions {
        epsilon: 0.5 * opts.epsilon,
        z_max: 2.0 * opts.z_max,
        nodes: 2 * opts.nodes,
        ..*opts
    };
    Ok((solve_a_with(beta, &finer)?.a - base.a).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_is_normalised_and_monotone() {
        for beta in [0.25, 0.5, 1.0, 2.0] {
            let pair = compute_fundamental_pair(beta, &SolverOptions::default()).unwrap();
            assert_eq!(pair.psi.value(0.0).unwrap(), 1.0);
            assert!((pair.phi.value(0.0).unwrap() - 1.0).abs() < 1e-15);
            for i in 1..=200 {
                let z = 8.0 * (i as f64 - 0.5) / 200.0;
                assert!(pair.psi.derivative(z).unwrap() > 0.0);
                assert!(pair.phi.derivative(z).unwrap() < 0.0);
                assert!(pair.wronskian(z).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn arcsine_boundary() {
        let sol = solve_a(0.5).unwrap();
        assert!((sol.a - 0.470_655).abs() < 1e-5, "{}", sol.a);
        let r = sol.residuals().unwrap();
        assert!(r.kink <= 1e-6 && r.smooth_pasting <= 1e-8 && r.value_match <= 1e-8, "{r:?}");
        assert!(r.continuity <= 1e-12 && r.boundary_equation <= 1e-8, "{r:?}");
        assert!(r.interior <= 1e-6, "{r:?}");
    }

    #[test]
    fn value_shape() {
        let sol = solve_a(1.0).unwrap();
        for t in [0.0, 0.5, 0.9] {
            let b = sol.boundary(t).unwrap();
            assert_eq!(sol.value(t, b).unwrap(), b);
            assert_eq!(sol.value(t, b + 1.0).unwrap(), b + 1.0);
            // u decays like 1/|z| on the left, as the classical value does
            let h = (1.0 - t).sqrt();
            let mid = sol.value(t, -8.0 * h).unwrap();
            let far = sol.value(t, -8000.0 * h).unwrap();
            assert!((far * 1000.0 / mid - 1.0).abs() < 1e-2, "{mid} {far}");
            assert!(far <= 1e-3 * h * sol.c_minus());
        }
        assert_eq!(sol.value(1.0, 0.0).unwrap(), 0.0);
        assert!(sol.value(1.0, 0.3).is_err());
        assert_eq!(sol.boundary(1.0).unwrap(), 0.0);
    }
}
