use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result};

/// Step control for [`ode_integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Local error allowed per unit of integration length, scaled by
    /// `1 + |y|` component-wise.
    pub step_tol: f64,
    /// First trial step; later steps are chosen by the controller.
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-12,
            initial_step: 1e-4,
            max_steps: 1_000_000,
        }
    }
}

/// States at the requested output nodes (the start point comes first).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub z: Vec<f64>,
    pub states: Vec<[f64; N]>,
    /// Accepted steps across the whole run.
    pub steps: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        let i = self.z.len() - 1;
        (self.z[i], self.states[i])
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `y' = rhs(z, y)` from `z0` to `z1` with the Dormand–Prince 5(4)
/// pair, reporting the state exactly at each of `nodes`.
///
/// `nodes` must be monotone in the direction of integration and lie within
/// `[z0, z1]`; the integrator lands on each node instead of interpolating.
/// `z1` may be smaller than `z0`.
pub fn ode_integrate<const N: usize, F>(
    mut rhs: F,
    z0: f64,
    z1: f64,
    state0: [f64; N],
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(opts.step_tol > 0.0) || !(opts.initial_step > 0.0) {
        return Err(Error::Domain("ODE tolerances must be positive"));
    }
    let dir = if z1 >= z0 { 1.0 } else { -1.0 };
    let mut prev = z0;
    for &node in nodes {
        if (node - prev) * dir < 0.0 || (z1 - node) * dir < 0.0 {
            return Err(Error::Domain("output nodes must be monotone inside [z0, z1]"));
        }
        prev = node;
    }

    let mut out = Trajectory {
        z: Vec::with_capacity(nodes.len() + 2),
        states: Vec::with_capacity(nodes.len() + 2),
        steps: 0,
    };
    out.z.push(z0);
    out.states.push(state0);

    let mut z = z0;
    let mut y = state0;
    let mut k1 = rhs(z, &y);
    let mut h = opts.initial_step.min((z1 - z0).abs().max(f64::MIN_POSITIVE));

    for target in nodes.iter().copied().chain(core::iter::once(z1)) {
        while (target - z) * dir > 0.0 {
            if out.steps >= opts.max_steps {
                return Err(Error::Stiffness { at: z });
            }
            let remaining = (target - z).abs();
            let hit = h >= remaining;
            let step = if hit { remaining } else { h };
            let (y_new, k_last, err) = dp_step(&mut rhs, z, &y, &k1, dir * step);
            let scale = opts.step_tol * step;
            let mut norm = 0.0f64;
            for i in 0..N {
                norm = norm.max(err[i].abs() / (scale * (1.0 + y[i].abs().max(y_new[i].abs()))));
            }
            if norm.is_nan() {
                h = 0.25 * step;
            } else if norm <= 1.0 {
                z = if hit { target } else { z + dir * step };
                y = y_new;
                k1 = k_last;
                out.steps += 1;
                let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.25)).clamp(0.2, 5.0) };
                // Landing on a node shortens the step artificially; keep the
                // controller's previous proposal if it was larger.
                h = if hit { h.max(step * grow) } else { step * grow };
            } else {
                h = step * (0.9 * norm.powf(-0.25)).clamp(0.2, 1.0);
            }
            if h < 1e-14 * (1.0 + z.abs()) {
                return Err(Error::Stiffness { at: z });
            }
        }
        if out.z.last() != Some(&target) {
            out.z.push(target);
            out.states.push(y);
        }
    }
    Ok(out)
}

fn dp_step<const N: usize, F>(
    rhs: &mut F,
    z: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> ([f64; N], [f64; N], [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut ys = *y;
        for i in 0..N {
            let mut acc = 0.0;
            for j in 0..s {
                acc += A[s][j] * k[j][i];
            }
            ys[i] += h * acc;
        }
        k[s] = rhs(z + C[s] * h, &ys);
    }
    // Stage 7 is evaluated at the 5th-order solution (FSAL).
    let mut y_new = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for j in 0..6 {
            acc += A[6][j] * k[j][i];
        }
        y_new[i] += h * acc;
    }
    let mut err = [0.0; N];
    for i in 0..N {
        let mut acc = 0.0;
        for j in 0..7 {
            acc += E[j] * k[j][i];
        }
        err[i] = h * acc;
    }
    (y_new, k[6], err)
}
