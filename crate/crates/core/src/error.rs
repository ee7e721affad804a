use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(&'static str),

    /// Adaptive quadrature hit its subdivision limit.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Convergence { estimate: f64, error: f64 },

    #[error("root not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// The ODE step size collapsed below the representable resolution.
    #[error("step size underflow at z = {at}")]
    Stiffness { at: f64 },

    /// A numerical configuration (grid, cut-offs) is inadequate for the request.
    #[error("configuration error: {0}")]
    Config(&'static str),

    /// Invalid prior specification.
    #[error("invalid prior: {0}")]
    Prior(&'static str),

    /// A result violated an invariant that the theory guarantees.
    #[error("internal consistency error: {0}")]
    Internal(&'static str),
}
