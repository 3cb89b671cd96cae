//! Numerical laboratory for quenched limit theorems of random hyperbolic
//! dynamics on the two-torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: fiber maps, the i.i.d. symbolic driving system, observables,
//!   Birkhoff sums and the skew product.
//! * [`operator`]: Ulam discretisations of the transfer-operator cocycle and of
//!   its twisted version, equivariant densities, Lyapunov spectra and
//!   Lasota–Yorke style diagnostics.
//! * [`spectral`]: fiber eigenvalues, the moment function `Λ(θ)`, the variance
//!   `Σ²`, rate functions and aperiodicity diagnostics.
//! * [`montecarlo`]: sampling from the fiber measures and empirical checks of
//!   the large deviation, central and local central limit theorems.

pub mod dynamics;
pub mod error;
pub mod montecarlo;
pub mod operator;
pub mod seed;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
