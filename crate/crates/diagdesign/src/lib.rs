//! Exact combinatorics and Monte Carlo simulation of diagonal-unitary
//! t-designs and the state designs they generate.

pub mod bitseq;
pub mod circuits;
pub mod decay;
pub mod error;
pub mod exact;
pub mod moments;
pub mod montecarlo;

pub use error::{Error, Result};
