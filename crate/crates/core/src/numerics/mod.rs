//! Numerical kernel shared by every solver in the crate.
//!
//! Everything here is a pure function of its arguments; tolerances default to
//! the values on [`QuadratureSpec::default`] and [`OdeOptions::default`] and can
//! be overridden per call.

mod normal;
mod ode;
mod quad;
mod roots;
mod special;

pub use normal::{normal_cdf, normal_pdf, normal_sf, upper_mills_ratio};
pub use ode::{ode_integrate, OdeOptions, Trajectory};
pub use quad::{integrate_adaptive, Estimate, QuadratureSpec};
pub use roots::{find_root_monotone, RootBracket};
pub use special::{
    beta_fn, bessel_k_half, bessel_k_half_scaled, bessel_k_half_seq_scaled, gamma_fn, ln_gamma,
    tricomi_u,
};
