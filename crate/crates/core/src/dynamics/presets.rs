//! Reference systems used by the examples, tests and acceptance checks.

use super::map::{HyperbolicMap, IntMatrix, Piece, Shear};
use super::observable::{Observable, TrigPoly, TrigTerm};
use super::omega::Distribution;
use super::system::RandomSystem;
use crate::error::Result;

/// Amplitude cap for the preset perturbations.
pub const DELTA: f64 = 0.05;
pub const AMPLITUDE: f64 = 0.03;

fn coin() -> Distribution {
    Distribution::new(vec![0.5, 0.5]).expect("valid distribution")
}

/// `cos(2πx₁) + ½a·sin(2πx₂)` for symbol `a`.
pub fn standard_observable() -> Observable {
    let poly = |a: usize| {
        let mut terms = vec![TrigTerm { frequency: [1, 0], cos: 1.0, sin: 0.0 }];
        if a > 0 {
            terms.push(TrigTerm { frequency: [0, 1], cos: 0.0, sin: 0.5 * a as f64 });
        }
        TrigPoly::new(terms)
    };
    Observable::new(vec![poly(0), poly(1)], None).expect("valid observable")
}

fn sheared_cat(shear: Shear) -> Result<HyperbolicMap> {
    HyperbolicMap::perturbed(IntMatrix::CAT, vec![shear], DELTA)
}

/// Cat map and cat map after an area-preserving shear, chosen by a fair coin.
/// Every fiber preserves Lebesgue measure, so `μ_ω` is Lebesgue.
pub fn standard() -> Result<RandomSystem> {
    let shear = Shear { frequency: [0, 1], direction: [1.0, 0.0], amplitude: AMPLITUDE };
    RandomSystem::new(
        vec![HyperbolicMap::linear(IntMatrix::CAT)?, sheared_cat(shear)?],
        coin(),
        standard_observable(),
    )
}

/// As [`standard`], but symbol 1 is perturbed by `x₁ ↦ x₁ + a·sin(2πx₁)`,
/// which does not preserve area.
pub fn dissipative() -> Result<RandomSystem> {
    let shear = Shear { frequency: [1, 0], direction: [1.0, 0.0], amplitude: AMPLITUDE };
    RandomSystem::new(
        vec![HyperbolicMap::linear(IntMatrix::CAT)?, sheared_cat(shear)?],
        coin(),
        standard_observable(),
    )
}

/// Standard dynamics with `g = r − r∘T_ω`, `r = cos(2πx₁)`.
pub fn coboundary() -> Result<RandomSystem> {
    standard()?.with_observable(Observable::coboundary(2, TrigPoly::cos([1, 0], 1.0)))
}

/// Standard dynamics with the constant observable `g ≡ 2π`, whose Birkhoff
/// sums live on a lattice.
pub fn lattice() -> Result<RandomSystem> {
    let c = TrigPoly::cos([0, 0], std::f64::consts::TAU);
    standard()?.with_observable(Observable::new(vec![c.clone(), c], None)?)
}

/// Cat map and a two-strip piecewise automorphism that rotates the strip
/// `[½, 1)` vertically by ¼ before applying the cat matrix.
pub fn piecewise() -> Result<RandomSystem> {
    let pieces = vec![
        Piece { start: 0.0, matrix: IntMatrix::CAT, offset: [0.0, 0.0] },
        Piece { start: 0.5, matrix: IntMatrix::CAT, offset: [0.25, 0.25] },
    ];
    RandomSystem::new(
        vec![HyperbolicMap::linear(IntMatrix::CAT)?, HyperbolicMap::piecewise(IntMatrix::CAT, pieces)?],
        coin(),
        standard_observable(),
    )
}
