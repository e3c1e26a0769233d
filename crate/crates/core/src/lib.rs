//! Numerical laboratory for one-dimensional Schrödinger operators with
//! potentials sampled along subshifts of finite type.
//!
//! The crate is organized bottom-up:
//!
//! * [`symbolic`]: subshifts, windows, the metric, wedges, mixing.
//! * [`measure`]: Markov/Bernoulli measures, sampling, distortion constants.
//! * [`sampling`]: locally constant and layered Hölder sampling functions, torus systems.
//! * [`cocycle`]: Schrödinger cocycles, scaled products, holonomies, reductions.
//! * [`ustate`]: projective dynamics, u-state approximation, the Furstenberg integral.
//! * [`lyapunov`]: Lyapunov exponents, deviation probabilities and rate fits.
//! * [`green`]: finite-volume operators, eigensystems, determinants and Green functions.
//! * [`localization`]: eigenfunction decay, double resonances, dynamical probes.

pub mod cocycle;
pub mod error;
pub mod green;
pub mod linalg;
pub mod localization;
pub mod lyapunov;
pub mod measure;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod symbolic;
pub mod ustate;

pub use error::{Error, Result};
pub use linalg::Mat2;
pub use measure::ShiftMeasure;
pub use symbolic::{SftSpec, Symbol, SymbolWindow};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
