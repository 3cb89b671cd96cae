//! Random hyperbolic dynamics on the two-torus.
//!
//! A [`RandomSystem`] bundles one fiber map per symbol with an observable.
//! Together with an [`OmegaPath`] (one realisation of the i.i.d. driving
//! shift) it evaluates the map cocycle, Birkhoff sums and the skew product.

mod map;
mod observable;
mod omega;
pub mod presets;
mod system;
mod torus;

pub use map::{HyperbolicMap, IntMatrix, MapKind, Piece, Shear, TorusMap};
pub use observable::{Observable, TrigPoly, TrigTerm};
pub use omega::{Distribution, OmegaPath};
pub use system::{RandomSystem, SkewState};
pub use torus::{wrap_unit, TorusPoint};
