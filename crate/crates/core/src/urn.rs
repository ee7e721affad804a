//! Discrete analogue: `2n` balls, half red (+1) and half black (-1), drawn
//! without replacement; stop to collect the running sum.
//!
//! Draw sequences are exchangeable, so the likelihood of a history depends on
//! the counts only and the state `(k, s)` (draws made, reds minus blacks) is
//! sufficient even when `n` is unknown.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result};

/// Finite prior over the number `n` of balls of each colour.
#[derive(Debug, Clone, PartialEq)]
pub struct NPrior {
    support: Vec<(u32, f64)>,
}

impl NPrior {
    /// Weights need not be normalised; zero weights are dropped.
    pub fn new(mut support: Vec<(u32, f64)>) -> Result<Self> {
        support.retain(|&(_, w)| w > 0.0);
        if support.is_empty() {
            return Err(Error::Config("prior over n has no mass"));
        }
        if support.iter().any(|&(n, w)| n == 0 || !w.is_finite()) {
            return Err(Error::Config("prior over n needs n >= 1 and finite weights"));
        }
        support.sort_by_key(|&(n, _)| n);
        for i in 1..support.len() {
            if support[i].0 == support[i - 1].0 {
                return Err(Error::Config("prior over n lists a value twice"));
            }
        }
        let total: f64 = support.iter().map(|&(_, w)| w).sum();
        support.iter_mut().for_each(|p| p.1 /= total);
        Ok(Self { support })
    }

    pub fn point(n: u32) -> Result<Self> {
        Self::new(vec![(n, 1.0)])
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn n_max(&self) -> u32 {
        self.support.last().unwrap().0
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(n, w)| f64::from(n) * w).sum()
    }

    /// Posterior over `n` after `k` draws with sum `s`; `None` if infeasible.
    pub fn posterior(&self, k: u32, s: i64) -> Option<Vec<(u32, f64)>> {
        let lf = LogFactorials::new(2 * self.n_max() as usize);
        let mut out = Vec::new();
        posterior_into(&self.support, &lf, k, s, &mut out);
        if out.is_empty() {
            None
        } else {
            Some(out)
        }
    }
}

struct LogFactorials(Vec<f64>);

impl LogFactorials {
    fn new(m: usize) -> Self {
        let mut v = Vec::with_capacity(m + 1);
        v.push(0.0);
        for i in 1..=m {
            v.push(v[i - 1] + (i as f64).ln());
        }
        Self(v)
    }

    /// ln of the falling factorial `(a)_j`.
    fn falling(&self, a: u32, j: u32) -> f64 {
        self.0[a as usize] - self.0[(a - j) as usize]
    }
}

fn posterior_into(
    support: &[(u32, f64)],
    lf: &LogFactorials,
    k: u32,
    s: i64,
    out: &mut Vec<(u32, f64)>,
) {
    out.clear();
    let reds = ((i64::from(k) + s) / 2) as u32;
    let blacks = k - reds;
    let mut best = f64::NEG_INFINITY;
    let mut logs = Vec::new();
    for &(n, w) in support {
        if reds > n || blacks > n {
            continue;
        }
        // P(history | n) = (n)_r (n)_b / (2n)_k
        let l = w.ln() + lf.falling(n, reds) + lf.falling(n, blacks) - lf.falling(2 * n, k);
        best = best.max(l);
        logs.push((n, l));
    }
    let mut total = 0.0;
    for (n, l) in logs {
        let p = (l - best).exp();
        total += p;
        out.push((n, p));
    }
    out.iter_mut().for_each(|e| e.1 /= total);
}

/// Values and actions on every reachable `(k, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UrnPolicy {
    n_max: u32,
    // row k holds s = -m_k, -m_k + 2, ..., m_k with m_k = min(k, 2 n_max - k)
    values: Vec<Vec<f64>>,
    stop: Vec<Vec<bool>>,
}

fn half_width(k: u32, n_max: u32) -> u32 {
    k.min(2 * n_max - k)
}

impl UrnPolicy {
    fn index(&self, k: u32, s: i64) -> Option<usize> {
        if k > 2 * self.n_max {
            return None;
        }
        let m = i64::from(half_width(k, self.n_max));
        if s.abs() > m || (s + m) % 2 != 0 {
            return None;
        }
        Some(((s + m) / 2) as usize)
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn value(&self, k: u32, s: i64) -> Option<f64> {
        self.index(k, s).map(|i| self.values[k as usize][i])
    }

    pub fn stops(&self, k: u32, s: i64) -> Option<bool> {
        self.index(k, s).map(|i| self.stop[k as usize][i])
    }

    /// Smallest sum at which the policy stops after `k` draws.
    pub fn min_stop_sum(&self, k: u32) -> Option<i64> {
        let row = self.stop.get(k as usize)?;
        let m = i64::from(half_width(k, self.n_max));
        row.iter()
            .position(|&b| b)
            .map(|i| 2 * i as i64 - m)
    }

    /// `(k, s, stop, value)` for every state, ordered by `k` then `s`.
    pub fn states(&self) -> impl Iterator<Item = (u32, i64, bool, f64)> + '_ {
        self.values.iter().enumerate().flat_map(move |(k, row)| {
            let m = i64::from(half_width(k as u32, self.n_max));
            row.iter()
                .enumerate()
                .map(move |(i, &v)| (k as u32, 2 * i as i64 - m, self.stop[k][i], v))
        })
    }
}

const KNOWN_N_LIMIT: u32 = 5000;
const UNKNOWN_N_LIMIT: u32 = 2000;

/// Backward induction when `n` is known.
pub fn solve_known_n(n: u32) -> Result<UrnPolicy> {
    if n == 0 || n > KNOWN_N_LIMIT {
        return Err(Error::Config("known-n urn needs 1 <= n <= 5000"));
    }
    let total = 2 * n;
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(total as usize + 1);
    let mut stop: Vec<Vec<bool>> = Vec::with_capacity(total as usize + 1);
    values.resize_with(total as usize + 1, Vec::new);
    stop.resize_with(total as usize + 1, Vec::new);
    values[total as usize] = vec![0.0];
    stop[total as usize] = vec![true];
    for k in (0..total).rev() {
        let m = half_width(k, n);
        let m_next = i64::from(half_width(k + 1, n));
        let next = &values[k as usize + 1];
        let mut row = Vec::with_capacity(m as usize + 1);
        let mut acts = Vec::with_capacity(m as usize + 1);
        for i in 0..=m {
            let s = 2 * i64::from(i) - i64::from(m);
            let reds = ((i64::from(k) + s) / 2) as u32;
            let p_red = f64::from(n - reds) / f64::from(total - k);
            let at = |s2: i64| {
                if s2.abs() > m_next {
                    0.0
                } else {
                    next[((s2 + m_next) / 2) as usize]
                }
            };
            let cont = p_red * at(s + 1) + (1.0 - p_red) * at(s - 1);
            let s_f = s as f64;
            acts.push(s_f >= cont);
            row.push(s_f.max(cont));
        }
        values[k as usize] = row;
        stop[k as usize] = acts;
    }
    Ok(UrnPolicy {
        n_max: n,
        values,
        stop,
    })
}

/// Bayesian backward induction with a finite prior over `n`.
///
/// A hypothesis under which the urn is already empty ends the game at sum 0,
/// so it contributes nothing to the continuation value.
pub fn solve_unknown_n(prior: &NPrior) -> Result<UrnPolicy> {
    let n_max = prior.n_max();
    if n_max > UNKNOWN_N_LIMIT {
        return Err(Error::Config("unknown-n urn needs n_max <= 2000"));
    }
    let total = 2 * n_max;
    let lf = LogFactorials::new(total as usize);
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut stop: Vec<Vec<bool>> = Vec::new();
    values.resize_with(total as usize + 1, Vec::new);
    stop.resize_with(total as usize + 1, Vec::new);
    values[total as usize] = vec![0.0];
    stop[total as usize] = vec![true];
    let mut post = Vec::new();
    for k in (0..total).rev() {
        let m = half_width(k, n_max);
        let m_next = i64::from(half_width(k + 1, n_max));
        let next = &values[k as usize + 1];
        let at = |s2: i64| next[((s2 + m_next) / 2) as usize];
        let mut row = Vec::with_capacity(m as usize + 1);
        let mut acts = Vec::with_capacity(m as usize + 1);
        for i in 0..=m {
            let s = 2 * i64::from(i) - i64::from(m);
            posterior_into(prior.support(), &lf, k, s, &mut post);
            let s_f = s as f64;
            if post.is_empty() {
                // unreachable under this prior; keep the payoff
                row.push(s_f.max(0.0));
                acts.push(s_f >= 0.0);
                continue;
            }
            let reds = ((i64::from(k) + s) / 2) as u32;
            let mut cont = 0.0;
            for &(n, w) in &post {
                if 2 * n == k {
                    continue;
                }
                let p_red = f64::from(n - reds) / f64::from(2 * n - k);
                let mut c = 0.0;
                if p_red > 0.0 {
                    c += p_red * at(s + 1);
                }
                if p_red < 1.0 {
                    c += (1.0 - p_red) * at(s - 1);
                }
                cont += w * c;
            }
            acts.push(s_f >= cont);
            row.push(s_f.max(cont));
        }
        values[k as usize] = row;
        stop[k as usize] = acts;
    }
    Ok(UrnPolicy {
        n_max,
        values,
        stop,
    })
}
