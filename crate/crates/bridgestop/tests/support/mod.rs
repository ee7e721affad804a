//! Finite-difference oracle for the free boundary.
//!
//! Works with `w(σ, z) = V/√(1-t)` where `z = x/√(1-t)` and `σ` is
//! `ln(1-t)` measured from a late start time, so marching in `σ` runs
//! backward in `t`. The evolution is
//!
//! `w_σ = ½(w_zz + h(z)·w_z - w) - ½·α·δ₀(z)·w`, with `w ≥ z`,
//!
//! started from `w = max(z, 0)`. Each implicit Euler step is a tridiagonal
//! complementarity problem solved exactly by the Brennan–Schwartz sweep; the
//! stopping set `{z ≥ A}` is one-sided so the sweep is valid. The jump
//! condition at `z = 0` is imposed by a control volume around the node there.
//! Steps continue until `w` stops changing, leaving the stationary solution.

#![allow(dead_code)]

pub struct DriftModel {
    /// `h(z)` for `z ≠ 0`.
    pub h: Box<dyn Fn(f64) -> f64>,
    /// `h(0+)` and `h(0-)`.
    pub h_zero: (f64, f64),
    /// Kink strength: `w_z(0+) - w_z(0-) = α·w(0)`.
    pub alpha: f64,
}

pub struct Grid {
    pub z_lo: f64,
    pub z_hi: f64,
    pub dz: f64,
    pub ds: f64,
    pub max_steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            z_lo: -8.0,
            z_hi: 4.0,
            dz: 5e-4,
            ds: 0.05,
            max_steps: 20_000,
        }
    }
}

pub struct Oracle {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    /// Free boundary from a smooth-fit extrapolation.
    pub boundary: f64,
    /// Last grid node in the continuation region.
    pub last_continuation: f64,
    pub steps: usize,
}

impl Oracle {
    pub fn value_at(&self, z: f64) -> f64 {
        let s = (z - self.z[0]) / (self.z[1] - self.z[0]);
        let i = (s.floor() as usize).min(self.z.len() - 2);
        let f = s - i as f64;
        self.w[i] * (1.0 - f) + self.w[i + 1] * f
    }
}

pub fn solve(model: &DriftModel, grid: &Grid) -> Oracle {
    let dz = grid.dz;
    let left = (-grid.z_lo / dz).round() as usize;
    let right = (grid.z_hi / dz).round() as usize;
    let n = left + right + 1;
    let z: Vec<f64> = (0..n).map(|i| (i as f64 - left as f64) * dz).collect();

    // rows of (I - ds·½·L) w_new = w_old
    let (mut a, mut b, mut c) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let k = 0.5 * grid.ds;
    let inv2 = 1.0 / (dz * dz);
    for i in 1..n - 1 {
        if i == left {
            let (hp, hm) = model.h_zero;
            a[i] = -k * (inv2 - hm / (2.0 * dz));
            c[i] = -k * (inv2 + hp / (2.0 * dz));
            b[i] = 1.0 + k * (2.0 * inv2 + (hp - hm) / (2.0 * dz) + 1.0 + model.alpha / dz);
        } else {
            let h = (model.h)(z[i]);
            a[i] = -k * (inv2 - h / (2.0 * dz));
            c[i] = -k * (inv2 + h / (2.0 * dz));
            b[i] = 1.0 + k * (2.0 * inv2 + 1.0);
        }
    }
    // left: w' = w/|z| (a 1/|z| tail); right: deep in the stopping set
    b[0] = 1.0 + dz / grid.z_lo.abs();
    c[0] = -1.0;
    b[n - 1] = 1.0;

    // forward elimination is independent of the right-hand side
    let mut d = b.clone();
    let mut m = vec![0.0; n];
    for i in 1..n {
        m[i] = a[i] / d[i - 1];
        d[i] = b[i] - m[i] * c[i - 1];
    }

    let mut w: Vec<f64> = z.iter().map(|&x| x.max(0.0)).collect();
    let mut rhs = vec![0.0; n];
    let mut steps = 0;
    while steps < grid.max_steps {
        steps += 1;
        rhs.copy_from_slice(&w);
        rhs[0] = 0.0;
        rhs[n - 1] = z[n - 1];
        for i in 1..n {
            rhs[i] -= m[i] * rhs[i - 1];
        }
        let mut change: f64 = 0.0;
        let mut next = rhs[n - 1] / d[n - 1];
        next = next.max(z[n - 1]);
        change = change.max((next - w[n - 1]).abs());
        w[n - 1] = next;
        for i in (0..n - 1).rev() {
            let v = ((rhs[i] - c[i] * w[i + 1]) / d[i]).max(z[i]);
            change = change.max((v - w[i]).abs());
            w[i] = v;
        }
        if change < 1e-14 {
            break;
        }
    }

    // the gap w - z vanishes quadratically at the boundary: √gap is linear
    let contact = (left..n).find(|&i| w[i] - z[i] <= 1e-15).unwrap_or(n - 1);
    let fit: Vec<(f64, f64)> = (contact.saturating_sub(40)..contact.saturating_sub(4))
        .map(|i| (z[i], (w[i] - z[i]).max(0.0).sqrt()))
        .collect();
    let boundary = line_root(&fit);
    Oracle {
        last_continuation: z[contact - 1],
        z,
        w,
        boundary,
        steps,
    }
}

/// Root of the least-squares line through `pts`.
fn line_root(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx) * (p.0 - mx)));
    let slope = sxy / sxx;
    mx - my / slope
}

/// The known-θ problem: drift `-z`, no killing.
pub fn classical_model() -> DriftModel {
    DriftModel {
        h: Box::new(|z| -z),
        h_zero: (0.0, 0.0),
        alpha: 0.0,
    }
}

/// θ ~ B(1/2, β).
pub fn beta_model(beta: f64) -> DriftModel {
    use bridgestop_core::filter::{beta_zg, beta_zg_limit};
    use bridgestop_core::numerics::beta_fn;
    let l = beta_zg_limit(beta);
    DriftModel {
        h: Box::new(move |z| z - 2.0 * z.signum() * beta_zg(beta, z).unwrap()),
        h_zero: (-2.0 * l, 2.0 * l),
        alpha: 2.0 * (2.0 * std::f64::consts::PI).sqrt() / beta_fn(0.5, beta),
    }
}
