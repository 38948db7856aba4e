//! Regenerative simulation and output analysis for continuous-time Markov processes.
//!
//! The crate pairs simulators (finite CTMCs, Zig-Zag and bouncy particle
//! samplers, one-dimensional diffusions, a split chain with exact
//! regeneration) with estimators of the time-average variance constant and
//! with exact finite-state oracles against which every estimator is checked.
//!
//! All randomness flows through explicit [`rng::SimRng`] streams.

pub mod analysis;
pub mod ctmc;
pub mod diffusion;
pub mod error;
pub mod pdmp;
pub mod quadrature;
pub mod rng;
pub mod splitting;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};
pub use rng::{SimRng, Streams};
pub use trajectory::{integrate_functional, CumulativeIntegral, Functional, Trajectory};
