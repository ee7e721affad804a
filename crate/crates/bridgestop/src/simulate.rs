//! Monte Carlo under the primal model.
//!
//! θ is drawn from the prior and the bridge pinned at θ is stepped with exact
//! Gaussian transitions on the grid `t₀ + i·dt`. Stopping rules are checked at
//! grid times only.
//!
//! Path `i` always uses stream `i` of a ChaCha8 generator keyed by the seed.
//! Results are therefore independent of the thread count, and several rules
//! evaluated on one pass see exactly the same paths.

use std::fmt;
use std::sync::Arc;

use bridgestop_core::filter::{drift_factor, killing_rate, PosteriorState};
use bridgestop_core::priors::{Prior, PriorKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-4;

// paths per work unit; results do not depend on it
const BLOCK: u64 = 4096;

/// Law of the pinning time.
#[derive(Debug, Clone)]
pub enum Pinning {
    Random(Prior),
    /// θ known and equal to the given time.
    Fixed(f64),
}

impl Pinning {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Pinning::Random(prior) => prior.sample(rng),
            Pinning::Fixed(t) => *t,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Pinning::Random(prior) => prior.mean(),
            Pinning::Fixed(t) => *t,
        }
    }

    /// Right end of the support of θ.
    pub fn support_upper(&self) -> f64 {
        match self {
            Pinning::Random(prior) => prior.support_upper(),
            Pinning::Fixed(t) => *t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_paths: u64,
    pub dt: f64,
    pub seed: u64,
    /// `(t₀, x₀)`. With a random θ the start time must be `0` and `x₀` is
    /// the level the bridge starts from.
    pub start: (f64, f64),
    pub pinning: Pinning,
}

impl SimConfig {
    pub fn new(pinning: Pinning) -> Self {
        Self {
            n_paths: 100_000,
            dt: DEFAULT_DT,
            seed: 0,
            start: (0.0, 0.0),
            pinning,
        }
    }

    pub fn paths(mut self, n_paths: u64) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn start(mut self, t0: f64, x0: f64) -> Self {
        self.start = (t0, x0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (t0, x0) = self.start;
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt must be positive and finite"));
        }
        if !(t0 >= 0.0 && t0.is_finite() && x0.is_finite()) {
            return Err(Error::config("start must be finite with t0 >= 0"));
        }
        match &self.pinning {
            Pinning::Random(_) if t0 != 0.0 => {
                return Err(Error::config("a random pinning time needs t0 = 0"))
            }
            Pinning::Fixed(t) if !(*t > t0 && t.is_finite()) => {
                return Err(Error::config("fixed pinning time must exceed t0"))
            }
            _ => {}
        }
        let horizon = self.pinning.mean() - t0;
        if self.dt > horizon / 100.0 {
            return Err(Error::Config(format!(
                "dt = {} is too coarse for an expected horizon of {horizon}",
                self.dt
            )));
        }
        Ok(())
    }

    /// The generator used for path `index`.
    pub fn path_stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// One simulated path on the time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    pub theta: f64,
    pub times: Vec<f64>,
    /// `X` at each grid time; the last entry is the first grid time `≥ θ`,
    /// where the path is pinned at 0.
    pub values: Vec<f64>,
}

/// Steps one path, calling `visit(t, x)` at every grid time before θ until it
/// returns `false`. Returns θ and the number of grid times visited.
fn walk<R, F>(cfg: &SimConfig, rng: &mut R, mut visit: F) -> (f64, u64)
where
    R: Rng + ?Sized,
    F: FnMut(f64, f64) -> bool,
{
    let theta = cfg.pinning.sample(rng);
    let (t0, mut x) = cfg.start;
    let mut t = t0;
    if t >= theta || !visit(t, x) {
        return (theta, u64::from(t < theta));
    }
    let mut i: u64 = 0;
    loop {
        i += 1;
        let t_next = t0 + i as f64 * cfg.dt;
        if t_next >= theta {
            return (theta, i);
        }
        let ratio = (theta - t_next) / (theta - t);
        let z: f64 = StandardNormal.sample(rng);
        x = x * ratio + ((t_next - t) * ratio).sqrt() * z;
        t = t_next;
        if !visit(t, x) {
            return (theta, i + 1);
        }
    }
}

pub fn simulate_path<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> BridgePath {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let (theta, visited) = walk(cfg, rng, |t, x| {
        times.push(t);
        values.push(x);
        true
    });
    times.push(cfg.start.0 + visited as f64 * cfg.dt);
    values.push(0.0);
    BridgePath {
        theta,
        times,
        values,
    }
}

/// A first-crossing rule: stop at the first grid time with `X_t ≥ level(t)`.
#[derive(Clone)]
pub enum StoppingRule {
    Immediate,
    Never,
    Threshold(f64),
    /// `coef·√(t_pin - t)`, and `0` from `t_pin` on.
    SqrtBoundary { coef: f64, t_pin: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for StoppingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoppingRule::Immediate => f.write_str("Immediate"),
            StoppingRule::Never => f.write_str("Never"),
            StoppingRule::Threshold(c) => write!(f, "Threshold({c})"),
            StoppingRule::SqrtBoundary { coef, t_pin } => {
                write!(f, "SqrtBoundary {{ coef: {coef}, t_pin: {t_pin} }}")
            }
            StoppingRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl StoppingRule {
    pub fn level(&self, t: f64) -> f64 {
        match self {
            StoppingRule::Immediate => f64::NEG_INFINITY,
            StoppingRule::Never => f64::INFINITY,
            StoppingRule::Threshold(c) => *c,
            StoppingRule::SqrtBoundary { coef, t_pin } => coef * (t_pin - t).max(0.0).sqrt(),
            StoppingRule::Custom(b) => b(t),
        }
    }

    #[inline]
    pub fn stops(&self, t: f64, x: f64) -> bool {
        x >= self.level(t)
    }

    /// The same rule with its boundary multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            StoppingRule::Immediate | StoppingRule::Never => self.clone(),
            StoppingRule::Threshold(c) => StoppingRule::Threshold(c * factor),
            StoppingRule::SqrtBoundary { coef, t_pin } => StoppingRule::SqrtBoundary {
                coef: coef * factor,
                t_pin: *t_pin,
            },
            StoppingRule::Custom(b) => {
                let b = Arc::clone(b);
                StoppingRule::Custom(Arc::new(move |t| factor * b(t)))
            }
        }
    }
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub n_paths: u64,
    pub seed: u64,
}

impl McReport {
    /// `|estimate - v|` in standard errors.
    pub fn z_score(&self, v: f64) -> f64 {
        let gap = (self.estimate - v).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }

    pub fn within(&self, v: f64, n_se: f64) -> bool {
        (self.estimate - v).abs() <= n_se * self.std_error
    }
}

/// Streaming mean and centred sum of squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.n as f64 * w;
        self.n = n;
    }

    fn report(&self, seed: u64) -> McReport {
        let se = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        McReport {
            estimate: self.mean,
            std_error: se,
            ci95: (self.mean - 1.96 * se, self.mean + 1.96 * se),
            n_paths: self.n,
            seed,
        }
    }
}

/// Runs `per_path` over every path index in deterministic blocks and merges
/// the per-block accumulators in block order.
fn run_blocks<A, F, M>(n_paths: u64, init: impl Fn() -> A + Sync, per_path: F, merge: M) -> A
where
    A: Send,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(&mut A, A),
{
    let n_blocks = n_paths.div_ceil(BLOCK);
    let partial: Vec<A> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            for i in b * BLOCK..((b + 1) * BLOCK).min(n_paths) {
                per_path(&mut acc, i);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in partial {
        merge(&mut total, p);
    }
    total
}

/// Payoffs of several rules along one path; `out[j]` is `X_τ` for rule `j`
/// or 0 when the path pins first.
fn score_path<R: Rng + ?Sized>(cfg: &SimConfig, rules: &[StoppingRule], rng: &mut R, out: &mut [f64]) {
    out.fill(f64::NAN);
    let mut open = rules.len();
    walk(cfg, rng, |t, x| {
        for (slot, rule) in out.iter_mut().zip(rules) {
            if slot.is_nan() && rule.stops(t, x) {
                *slot = x;
                open -= 1;
            }
        }
        open > 0
    });
    for slot in out.iter_mut() {
        if slot.is_nan() {
            *slot = 0.0;
        }
    }
}

/// Per-rule values and paired differences `rule₀ - ruleⱼ`.
fn evaluate_rules(cfg: &SimConfig, rules: &[StoppingRule]) -> Result<(Vec<McReport>, Vec<McReport>)> {
    cfg.validate()?;
    let k = rules.len();
    let (values, diffs) = run_blocks(
        cfg.n_paths,
        || (vec![Moments::default(); k], vec![Moments::default(); k]),
        |(values, diffs), i| {
            let mut out = vec![0.0; k];
            score_path(cfg, rules, &mut cfg.path_stream(i), &mut out);
            for j in 0..k {
                values[j].push(out[j]);
                diffs[j].push(out[0] - out[j]);
            }
        },
        |(values, diffs), (v, d)| {
            values.iter_mut().zip(&v).for_each(|(a, b)| a.merge(b));
            diffs.iter_mut().zip(&d).for_each(|(a, b)| a.merge(b));
        },
    );
    let report = |m: Vec<Moments>| m.iter().map(|m| m.report(cfg.seed)).collect();
    Ok((report(values), report(diffs)))
}

/// Expected payoff `E[X_τ 1{τ<θ}]` of a first-crossing rule.
pub fn estimate_value(cfg: &SimConfig, rule: &StoppingRule) -> Result<McReport> {
    let (values, _) = evaluate_rules(cfg, std::slice::from_ref(rule))?;
    Ok(values[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub factor: f64,
    pub value: McReport,
    /// Paired estimate of `value(candidate) - value(scaled)`.
    pub gap: McReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub candidate: McReport,
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    /// No scaled rule has a larger point estimate.
    pub fn candidate_is_maximal(&self) -> bool {
        self.rows.iter().all(|r| r.value.estimate <= self.candidate.estimate)
    }

    /// Every scaled rule other than factor 1 sits below the candidate with
    /// disjoint 95% intervals.
    pub fn gaps_beyond_ci(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.factor != 1.0)
            .all(|r| r.value.ci95.1 < self.candidate.ci95.0)
    }
}

/// Values of `rule` and of its boundary scaled by each factor, all on the
/// same paths.
pub fn optimality_probe(cfg: &SimConfig, rule: &StoppingRule, factors: &[f64]) -> Result<ProbeTable> {
    let mut rules = vec![rule.clone()];
    rules.extend(factors.iter().map(|&f| rule.scaled(f)));
    let (values, diffs) = evaluate_rules(cfg, &rules)?;
    let rows = factors
        .iter()
        .enumerate()
        .map(|(j, &factor)| ProbeRow {
            factor,
            value: values[j + 1],
            gap: diffs[j + 1],
        })
        .collect();
    Ok(ProbeTable {
        candidate: values[0],
        rows,
    })
}

fn random_prior(cfg: &SimConfig) -> Result<&Prior> {
    match &cfg.pinning {
        Pinning::Random(prior) => Ok(prior),
        Pinning::Fixed(_) => Err(Error::config("validation needs a random pinning time")),
    }
}

/// Draws θ and, if `θ > t`, the exact bridge marginal `X_t`.
fn draw_survivor<R: Rng + ?Sized>(cfg: &SimConfig, t: f64, rng: &mut R) -> Option<(f64, f64)> {
    let theta = cfg.pinning.sample(rng);
    if theta <= t {
        return None;
    }
    let x0 = cfg.start.1;
    let mean = x0 * (theta - t) / theta;
    let sd = (t * (theta - t) / theta).sqrt();
    let z: f64 = StandardNormal.sample(rng);
    Some((theta, mean + sd * z))
}

/// Pinning frequency against the local-time compensator over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorReport {
    pub t: f64,
    /// Window actually used, a whole number of steps.
    pub window: f64,
    pub bandwidth: f64,
    pub survivors: u64,
    /// Fraction of paths alive at `t` that pin within the window.
    pub pin_frequency: McReport,
    /// Mean of `Σ q(u)·1{|X_u| ≤ h}·dt/(2h)` over the window.
    pub compensator: McReport,
}

impl CompensatorReport {
    pub fn combined_se(&self) -> f64 {
        self.pin_frequency.std_error.hypot(self.compensator.std_error)
    }

    pub fn z_score(&self) -> f64 {
        let gap = (self.pin_frequency.estimate - self.compensator.estimate).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.combined_se()
        }
    }

    pub fn agrees(&self, n_se: f64) -> bool {
        self.z_score() <= n_se
    }
}

pub fn validate_compensator(cfg: &SimConfig, t: f64, window: f64) -> Result<CompensatorReport> {
    cfg.validate()?;
    let prior = random_prior(cfg)?;
    if !(t >= 0.0 && t < prior.support_upper()) || window.is_nan() || window < 0.0 {
        return Err(Error::config("compensator check needs t inside the support and window >= 0"));
    }
    let dt = cfg.dt;
    let h = dt.sqrt();
    let steps = (window / dt).round() as u64;
    let end = t + steps as f64 * dt;
    let rates = (0..steps)
        .map(|j| {
            let u = t + j as f64 * dt;
            if u < prior.support_upper() {
                killing_rate(prior, u)
            } else {
                Ok(0.0)
            }
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let weight = dt / (2.0 * h);

    let (pins, comp) = run_blocks(
        cfg.n_paths,
        || (Moments::default(), Moments::default()),
        |(pins, comp), i| {
            let mut rng = cfg.path_stream(i);
            let Some((theta, mut x)) = draw_survivor(cfg, t, &mut rng) else {
                return;
            };
            let mut local = 0.0;
            let mut u = t;
            for (j, q) in rates.iter().enumerate() {
                if x.abs() <= h {
                    local += q * weight;
                }
                let u_next = t + (j + 1) as f64 * dt;
                if u_next >= theta {
                    break;
                }
                let ratio = (theta - u_next) / (theta - u);
                let z: f64 = StandardNormal.sample(&mut rng);
                x = x * ratio + ((u_next - u) * ratio).sqrt() * z;
                u = u_next;
            }
            pins.push(if theta <= end { 1.0 } else { 0.0 });
            comp.push(local);
        },
        |(p, c), (p2, c2)| {
            p.merge(&p2);
            c.merge(&c2);
        },
    );
    Ok(CompensatorReport {
        t,
        window: end - t,
        bandwidth: h,
        survivors: pins.n,
        pin_frequency: pins.report(cfg.seed),
        compensator: comp.report(cfg.seed),
    })
}

/// Empirical `E[1/(θ-t) | X_t ∈ bin]` against the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub t: f64,
    pub bin: (f64, f64),
    pub survivors: u64,
    pub in_bin: u64,
    pub inverse_gap: McReport,
    /// `f(t, centre of bin)`.
    pub f_center: f64,
    /// `f(t, X_t)` averaged over the paths that fell in the bin.
    pub f_bin_average: f64,
}

impl FilterReport {
    /// Distance from the empirical mean to `f_bin_average` in standard errors.
    pub fn z_score(&self) -> f64 {
        self.inverse_gap.z_score(self.f_bin_average)
    }
}

pub fn validate_filter(cfg: &SimConfig, t: f64, bin: (f64, f64)) -> Result<FilterReport> {
    cfg.validate()?;
    let prior = random_prior(cfg)?;
    let (lo, hi) = bin;
    if lo.is_nan() || hi.is_nan() || lo >= hi || (lo <= 0.0 && hi >= 0.0) {
        return Err(Error::config("filter bin must be a nonempty interval away from 0"));
    }
    if !(t >= 0.0 && t < prior.support_upper()) {
        return Err(Error::config("filter check needs t inside the support"));
    }
    let kappa = cfg.start.1;
    let f_at = |x: f64| -> Result<f64> {
        let state = PosteriorState::new(prior, t, x, kappa)?;
        Ok(drift_factor(&state)?.f_value)
    };
    // f is smooth away from 0: tabulate across the bin and interpolate
    const KNOTS: usize = 64;
    let knots: Vec<f64> = (0..=KNOTS)
        .map(|i| lo + (hi - lo) * i as f64 / KNOTS as f64)
        .collect();
    let f_knots = knots.iter().map(|&x| f_at(x)).collect::<Result<Vec<f64>>>()?;
    let interp = |x: f64| {
        let s = ((x - lo) / (hi - lo) * KNOTS as f64).clamp(0.0, KNOTS as f64);
        let i = (s.floor() as usize).min(KNOTS - 1);
        let w = s - i as f64;
        f_knots[i] * (1.0 - w) + f_knots[i + 1] * w
    };

    let (survivors, gaps, f_sum) = run_blocks(
        cfg.n_paths,
        || (0u64, Moments::default(), 0.0f64),
        |(survivors, gaps, f_sum), i| {
            let mut rng = cfg.path_stream(i);
            if let Some((theta, x)) = draw_survivor(cfg, t, &mut rng) {
                *survivors += 1;
                if (lo..=hi).contains(&x) {
                    gaps.push(1.0 / (theta - t));
                    *f_sum += interp(x);
                }
            }
        },
        |(s, g, f), (s2, g2, f2)| {
            *s += s2;
            g.merge(&g2);
            *f += f2;
        },
    );
    if gaps.n < 2 {
        return Err(Error::InsufficientData(format!(
            "{} of {} surviving paths fell in [{lo}, {hi}] at t = {t}",
            gaps.n, survivors
        )));
    }
    Ok(FilterReport {
        t,
        bin,
        survivors,
        in_bin: gaps.n,
        inverse_gap: gaps.report(cfg.seed),
        f_center: f_at(0.5 * (lo + hi))?,
        f_bin_average: f_sum / gaps.n as f64,
    })
}

/// Support end used for the dominance bound; infinite for the gamma family.
pub fn horizon_of(pinning: &Pinning) -> f64 {
    match pinning {
        Pinning::Random(p) if matches!(p.kind(), PriorKind::GammaHalf { .. }) => f64::INFINITY,
        other => other.support_upper(),
    }
}
