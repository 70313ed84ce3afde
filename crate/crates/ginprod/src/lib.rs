//! Statistics of the real eigenvalues of products of independent real
//! Ginibre matrices: exact finite-size moments and densities, their
//! asymptotic laws, and a Monte Carlo cross-check, plus the `ginprod` CLI.

pub mod asymptotics;
pub mod error;
pub mod meijer;
pub mod moments;
mod quad;
pub mod specfun;

pub use error::{Error, Result};
