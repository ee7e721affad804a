//! Monte Carlo validation, file formats and the command-line front end for
//! [`bridgestop_core`].

pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod simulate;

pub use error::{Error, Result};
