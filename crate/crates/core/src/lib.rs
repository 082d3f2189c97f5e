//! Optimal transport between capacities (monotone, not necessarily additive
//! set functions) on finite universes.
//!
//! Measures are compared through their Möbius or (max,+) transforms, which
//! turns each transport problem into a linear program over pairs of subsets.
//! [`transport::discrepancy`] is the minimal (max,+) transport cost.

pub mod cli;
pub mod cost;
pub mod error;
pub mod lp;
pub mod oracle;
pub mod setfun;
pub mod transport;

pub use error::{Error, Result};
