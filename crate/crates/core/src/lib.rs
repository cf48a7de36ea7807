//! Power allocation, adaptive NOMA/OMA selection and user clustering for
//! uplink two-user clusters mixing eMBB users (spectral efficiency) and IoT
//! users (energy efficiency).
//!
//! The pieces, bottom up:
//! - [`model`]: metrics and the weighted-sum objective of one cluster.
//! - [`numeric`]: golden-section search used inside the solvers.
//! - [`solver`]: NOMA fractional-programming solvers and OMA/Dinkelbach.
//! - [`oracle`]: brute-force grid maximization for validation.
//! - [`adaptive`]: per-cluster NOMA/OMA choice.
//! - [`clustering`]: the proposed pairing and two baselines.
//! - [`scenario`]: channel model and user drops.
//! - [`experiments`]: strategy comparison sweeps and CSV output.

pub mod adaptive;
pub mod clustering;
pub mod error;
pub mod experiments;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
