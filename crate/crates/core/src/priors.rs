//! Pinning-time priors.
//!
//! Two parametric families have closed-form filters: `Γ(n - 1/2, β)` on
//! `[0, ∞)` and `B(1/2, β)` on `[0, 1]`. Anything else can be supplied as a
//! tabulated density.

use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::numerics::{beta_fn, ln_gamma};
use crate::{Error, Result};

/// Pinning-time distribution μ. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    kind: PriorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorKind {
    /// Gamma with shape `n - 1/2` and rate `beta`.
    GammaHalf { n: u32, beta: f64 },
    /// Beta with shape parameters `1/2` and `beta` on `[0, 1]`.
    BetaHalf { beta: f64 },
    Tabulated(Tabulated),
}

/// Piecewise-linear density on an ascending grid, normalised to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    grid: Vec<f64>,
    density: Vec<f64>,
    // cumulative mass at each grid point
    cdf: Vec<f64>,
}

impl Tabulated {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    fn cell(&self, r: f64) -> Option<usize> {
        let (lo, hi) = (self.grid[0], *self.grid.last().unwrap());
        if !(r >= lo && r <= hi) {
            return None;
        }
        let i = self.grid.partition_point(|&g| g <= r);
        Some(i.clamp(1, self.grid.len() - 1) - 1)
    }

    fn density(&self, r: f64) -> f64 {
        match self.cell(r) {
            None => 0.0,
            Some(i) => {
                let (r0, r1) = (self.grid[i], self.grid[i + 1]);
                let w = (r - r0) / (r1 - r0);
                self.density[i] * (1.0 - w) + self.density[i + 1] * w
            }
        }
    }

    fn mean(&self) -> f64 {
        // exact for a linear density on each cell
        let mut m = 0.0;
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let (fa, fb) = (self.density[i], self.density[i + 1]);
            let h = b - a;
            m += h * (fa * (2.0 * a + b) + fb * (a + 2.0 * b)) / 6.0;
        }
        m
    }

    fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1) - 1;
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        let (fa, fb) = (self.density[i], self.density[i + 1]);
        let h = b - a;
        let need = u - self.cdf[i];
        // mass on [a, a+y] is fa*y + (fb-fa)*y²/(2h)
        let slope = (fb - fa) / h;
        let y = if slope.abs() * h < 1e-12 * (fa + fb).max(f64::MIN_POSITIVE) {
            if fa > 0.0 {
                need / fa
            } else {
                0.0
            }
        } else {
            let disc = (fa * fa + 2.0 * slope * need).max(0.0);
            2.0 * need / (fa + disc.sqrt())
        };
        (a + y).clamp(a, b)
    }
}

impl Prior {
    pub fn gamma_half(n: u32, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Prior("gamma prior needs n >= 1"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Prior("gamma prior needs a positive finite rate"));
        }
        Ok(Self {
            kind: PriorKind::GammaHalf { n, beta },
        })
    }

    pub fn beta_half(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Prior("beta prior needs a positive finite shape"));
        }
        Ok(Self {
            kind: PriorKind::BetaHalf { beta },
        })
    }

    /// Tabulated density on `grid` (both support endpoints included).
    ///
    /// The density is renormalised to unit mass; a warning is logged when the
    /// supplied values were off by more than `1e-6`.
    pub fn tabulated(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != density.len() {
            return Err(Error::Prior("tabulated prior needs matching grids of length >= 2"));
        }
        if !grid.iter().all(|g| g.is_finite()) || grid[0] < 0.0 {
            return Err(Error::Prior("tabulated grid must be finite and nonnegative"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Prior("tabulated grid must be strictly ascending"));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Prior("tabulated density must be finite and nonnegative"));
        }
        let mut cdf = Vec::with_capacity(grid.len());
        cdf.push(0.0);
        for i in 0..grid.len() - 1 {
            let cell = 0.5 * (density[i] + density[i + 1]) * (grid[i + 1] - grid[i]);
            cdf.push(cdf[i] + cell);
        }
        let mass = *cdf.last().unwrap();
        if !(mass > 0.0) {
            return Err(Error::Prior("tabulated density has zero mass"));
        }
        if (mass - 1.0).abs() > 1e-6 {
            log::warn!("tabulated prior had mass {mass}; renormalised");
        }
        let density = density.into_iter().map(|d| d / mass).collect();
        cdf.iter_mut().for_each(|c| *c /= mass);
        Ok(Self {
            kind: PriorKind::Tabulated(Tabulated { grid, density, cdf }),
        })
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn support_lower(&self) -> f64 {
        match &self.kind {
            PriorKind::Tabulated(tab) => tab.grid[0],
            _ => 0.0,
        }
    }

    /// Upper end `T` of the support; `+∞` for gamma priors.
    pub fn support_upper(&self) -> f64 {
        match &self.kind {
            PriorKind::GammaHalf { .. } => f64::INFINITY,
            PriorKind::BetaHalf { .. } => 1.0,
            PriorKind::Tabulated(tab) => *tab.grid.last().unwrap(),
        }
    }

    pub fn density(&self, r: f64) -> f64 {
        match &self.kind {
            PriorKind::GammaHalf { n, beta } => {
                if !(r > 0.0) || r.is_infinite() {
                    return 0.0;
                }
                let a = f64::from(*n) - 0.5;
                (a * beta.ln() - ln_gamma(a) + (a - 1.0) * r.ln() - beta * r).exp()
            }
            PriorKind::BetaHalf { beta } => {
                if !(r > 0.0 && r < 1.0) {
                    return 0.0;
                }
                (1.0 - r).powf(beta - 1.0) / (r.sqrt() * beta_fn(0.5, *beta))
            }
            PriorKind::Tabulated(tab) => tab.density(r),
        }
    }

    /// Density at `T - d` for a finite support end `T`, with `d` carried
    /// exactly so that a singular upper end stays resolvable.
    pub fn density_below_upper(&self, d: f64) -> f64 {
        match &self.kind {
            PriorKind::GammaHalf { .. } => 0.0,
            PriorKind::BetaHalf { beta } => {
                if !(d > 0.0 && d < 1.0) {
                    return 0.0;
                }
                d.powf(beta - 1.0) / ((1.0 - d).sqrt() * beta_fn(0.5, *beta))
            }
            PriorKind::Tabulated(tab) => tab.density(self.support_upper() - d),
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            PriorKind::GammaHalf { n, beta } => (f64::from(*n) - 0.5) / beta,
            PriorKind::BetaHalf { beta } => 1.0 / (1.0 + 2.0 * beta),
            PriorKind::Tabulated(tab) => tab.mean(),
        }
    }

    /// Draws θ ~ μ from a caller-owned generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            PriorKind::GammaHalf { n, beta } => {
                let shape = f64::from(*n) - 0.5;
                // parameters were validated at construction
                Gamma::new(shape, 1.0 / beta).unwrap().sample(rng)
            }
            PriorKind::BetaHalf { beta } => {
                let draw: f64 = Beta::new(0.5, *beta).unwrap().sample(rng);
                draw.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            }
            PriorKind::Tabulated(tab) => tab.quantile(rng.random::<f64>()),
        }
    }

    /// Density of the χ² law with `dof` degrees of freedom (rate-1/2 gamma).
    pub fn chi_squared_density(dof: u32, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let k = f64::from(dof) / 2.0;
        ((k - 1.0) * r.ln() - r / 2.0 - k * 2.0.ln() - ln_gamma(k)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::numerics::{integrate_adaptive, QuadratureSpec};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<Prior> {
        let mut v = Vec::new();
        for n in 1..=4 {
            for beta in [0.25, 0.5, 1.0, 3.0] {
                v.push(Prior::gamma_half(n, beta).unwrap());
            }
        }
        for beta in [0.25, 0.5, 1.0, 2.0, 5.0] {
            v.push(Prior::beta_half(beta).unwrap());
        }
        v.push(triangle());
        v
    }

    fn triangle() -> Prior {
        Prior::tabulated(vec![0.5, 1.0, 2.0], vec![0.0, 4.0 / 3.0, 0.0]).unwrap()
    }

    #[test]
    fn density_reference_values() {
        let g = Prior::gamma_half(1, 0.5).unwrap();
        assert_relative_eq!(g.density(1.0), 0.241_970_724_519_143_37, max_relative = 1e-13);
        let b = Prior::beta_half(0.5).unwrap();
        assert_relative_eq!(b.density(0.5), 2.0 / core::f64::consts::PI, max_relative = 1e-13);
        for p in families() {
            assert_eq!(p.density(-0.1), 0.0);
        }
    }

    #[test]
    fn means() {
        assert_relative_eq!(Prior::gamma_half(1, 0.5).unwrap().mean(), 1.0);
        assert_relative_eq!(Prior::beta_half(0.5).unwrap().mean(), 0.5);
        assert!(Prior::beta_half(1e9).unwrap().mean() < 1e-9);
        assert_relative_eq!(triangle().mean(), 3.5 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn densities_integrate_to_one() {
        let spec = QuadratureSpec::relative(1e-10);
        for p in families() {
            let (lo, hi) = (p.support_lower(), p.support_upper());
            let mass = if hi.is_finite() {
                // r = hi - v² keeps nodes clear of a singular upper end
                let mid = 0.5 * (lo + hi);
                let top = (hi - mid).sqrt();
                integrate_adaptive(|r| p.density(r), lo, mid, &spec).unwrap().value
                    + integrate_adaptive(|v| 2.0 * v * p.density_below_upper(v * v), 0.0, top, &spec)
                        .unwrap()
                        .value
            } else {
                integrate_adaptive(|r| p.density(r), lo, 1.0, &spec).unwrap().value
                    + integrate_adaptive(|r| p.density(r), 1.0, hi, &spec).unwrap().value
            };
            assert!((mass - 1.0).abs() < 1e-8, "{p:?}: {mass}");
        }
    }

    #[test]
    fn gamma_half_rate_half_is_chi_squared() {
        for n in 1..=6 {
            let p = Prior::gamma_half(n, 0.5).unwrap();
            for i in 0..=200 {
                let r = 0.1 + 9.9 * f64::from(i) / 200.0;
                let chi = Prior::chi_squared_density(2 * n - 1, r);
                assert!((p.density(r) - chi).abs() <= 1e-12, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn sample_means_match() {
        for p in families() {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let draws: Vec<f64> = (0..1_000_000).map(|_| p.sample(&mut rng)).collect();
            let n = draws.len() as f64;
            let m = draws.iter().sum::<f64>() / n;
            let var = draws.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((m - p.mean()).abs() <= 4.0 * se, "{p:?}: {m} vs {}", p.mean());
            if p.support_upper().is_finite() {
                let hi = p.support_upper();
                assert!(draws.iter().all(|&d| d >= p.support_lower() && d <= hi));
            }
        }
    }

    #[test]
    fn beta_draws_stay_inside_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for beta in [0.25, 0.5, 1.0, 2.0] {
            let p = Prior::beta_half(beta).unwrap();
            for _ in 0..100_000 {
                let d = p.sample(&mut rng);
                assert!(d > 0.0 && d < 1.0);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = Prior::gamma_half(2, 1.0).unwrap();
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..100).map(|_| p.sample(&mut rng)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let b: Vec<f64> = (0..100).map(|_| p.sample(&mut rng)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn tabulated_renormalises_and_inverts() {
        let p = Prior::tabulated(vec![0.0, 1.0, 3.0], vec![2.0, 2.0, 0.0]).unwrap();
        // raw mass 4, so the density halves
        assert_relative_eq!(p.density(0.5), 0.5);
        let PriorKind::Tabulated(tab) = p.kind() else { unreachable!() };
        for u in [0.0, 0.1, 0.5, 0.75, 0.9, 1.0] {
            let r = tab.quantile(u);
            let back = if r <= 1.0 {
                0.5 * r
            } else {
                0.5 + 0.5 * (r - 1.0) - 0.125 * (r - 1.0).powi(2)
            };
            assert!((back - u).abs() < 1e-12, "u={u} r={r}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Prior::gamma_half(0, 1.0).is_err());
        assert!(Prior::gamma_half(1, 0.0).is_err());
        assert!(Prior::beta_half(-1.0).is_err());
        assert!(Prior::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Prior::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Prior::tabulated(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }
}
