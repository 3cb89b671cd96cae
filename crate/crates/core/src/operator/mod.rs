//! Ulam discretisation of the transfer-operator cocycle.
//!
//! Densities are stored as cell masses and pushed forward by the transpose of
//! the row-stochastic Ulam matrix, so total mass is conserved exactly by the
//! untwisted cocycle. Matrices depend only on the current symbol, so a cocycle
//! along any driving path is a product of a handful of cached matrices.

mod density;
mod grid;
mod lasota_yorke;
mod lyapunov;
mod model;
mod sparse;
mod ulam;

pub mod eigen;

pub use density::{equivariant_density, pullback, pullback_decay_profile, DecayProfile};
pub use grid::{DensityVector, TwistedDensity, UlamGrid};
pub use lasota_yorke::{lasota_yorke_probe, test_densities, LasotaYorkeFit, NormPair};
pub use lyapunov::{lyapunov_spectrum, LyapunovReport};
pub use model::{OperatorModel, TwistedCocycle};
pub use sparse::{CsrMatrix, Scalar};
pub use ulam::{build_ulam, BalanceMode, TransitionSamples, TwistedUlamMatrix, UlamMatrix, UlamOptions};
