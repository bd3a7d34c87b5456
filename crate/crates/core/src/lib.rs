//! Numerical laboratory for `u_t = Δu + u^p` with radial data, in original
//! variables and in self-similar variables, with weighted entropy diagnostics.

pub mod config;
pub mod constants;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod interp;
pub mod output;
pub mod parallel;

pub use error::{Error, Hypothesis, Result};
