use serde::{Deserialize, Serialize};

/// Point of `[0,1)²`, the fundamental domain of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint(pub [f64; 2]);

/// Reduce a real number to `[0, 1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    let r = v - v.floor();
    // v slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl TorusPoint {
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self([x, y])
    }

    /// Reduce arbitrary real coordinates mod 1.
    #[inline]
    pub fn wrapped(x: f64, y: f64) -> Self {
        Self([wrap_unit(x), wrap_unit(y)])
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn is_normalized(&self) -> bool {
        self.0.iter().all(|c| (0.0..1.0).contains(c))
    }
}
