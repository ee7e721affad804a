//! Optimal stopping of a Brownian bridge whose pinning time is unknown.
//!
//! The stopper observes a bridge `dX = -X/(θ-t) dt + dB` that pins to zero at a
//! random time `θ ~ μ` and wants to maximise `E[X_τ 1{τ<θ}]`. This crate holds
//! the pure numerical side of the problem:
//!
//! - [`numerics`]: normal CDF, half-integer Bessel K, Tricomi U, adaptive
//!   quadrature, root finding and an embedded Runge–Kutta integrator.
//! - [`priors`]: pinning-time priors (gamma with shape `n - 1/2`, beta with
//!   first shape `1/2`, and tabulated densities).
//! - [`filter`]: the posterior of `θ` given `(t, X_t)`, the drift factor
//!   `f(t, x) = E[1/(θ-t) | t, x]` and the killing rate `q(t)` at zero.
//! - [`classical`]: the known-pinning-time benchmark (boundary `B√(T-t)`).
//! - [`gamma_solver`] and [`beta_solver`]: stopping boundaries and value
//!   functions for the two tractable prior families.
//! - [`urn`]: the discrete urn analogue solved by backward induction.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// When std is linked anywhere in the graph the float methods resolve
// inherently and the `Float` imports go unused.
#![allow(unused_imports)]
// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(
    test,
    allow(
        clippy::excessive_precision,
        clippy::type_complexity,
        clippy::inconsistent_digit_grouping
    )
)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod beta_solver;
pub mod classical;
mod error;
pub mod filter;
pub mod gamma_solver;
pub mod numerics;
pub mod priors;
pub mod urn;

pub use error::{Error, Result};
