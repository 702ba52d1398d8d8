//! Simulation and verification toolkit for the continuum random field Ising chain.
//!
//! The crate is organised by concern:
//!
//! * [`path`]: bilateral Brownian paths on an integer-anchored time grid.
//! * [`extrema`]: Γ-extrema (forward, backward and bilateral scans) and Fisher labels.
//! * [`sde`]: the one-sided processes `l`, `r`, the magnetization field, the reflected
//!   simplified model and pathwise validators.
//! * [`analytic`]: Bessel-function observables and their expansions.
//! * [`mc`]: Monte Carlo estimators and goodness-of-fit checks.
//! * [`discrete`]: transfer-matrix engine for the lattice chain.

pub mod analytic;
pub mod discrete;
pub mod error;
pub mod extrema;
pub mod mc;
pub mod path;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
