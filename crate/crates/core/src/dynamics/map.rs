use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::torus::TorusPoint;
use crate::error::{Error, Result};
use crate::seed;
use rand::Rng;

/// Integer 2×2 matrix acting on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix(pub [[i64; 2]; 2]);

impl IntMatrix {
    pub const CAT: IntMatrix = IntMatrix([[2, 1], [1, 1]]);

    pub fn trace(&self) -> i64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> i64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn is_hyperbolic_automorphism(&self) -> bool {
        self.det().abs() == 1 && self.trace().abs() > 2
    }

    /// Eigenvalues `(λ_u, λ_s)` ordered by decreasing modulus.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace() as f64;
        let disc = (tr * tr - 4.0 * self.det() as f64).sqrt();
        let a = 0.5 * (tr + disc);
        let b = 0.5 * (tr - disc);
        if a.abs() >= b.abs() {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Unit eigenvector of the expanding eigenvalue.
    pub fn unstable_direction(&self) -> [f64; 2] {
        let (lu, _) = self.eigenvalues();
        let [[a, b], [c, d]] = self.as_f64();
        // (A - λ)v = 0
        let v = if b.abs() > 0.0 {
            [b, lu - a]
        } else if c.abs() > 0.0 {
            [lu - d, c]
        } else {
            [1.0, 0.0]
        };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    }

    pub fn as_f64(&self) -> [[f64; 2]; 2] {
        let m = self.0;
        [
            [m[0][0] as f64, m[0][1] as f64],
            [m[1][0] as f64, m[1][1] as f64],
        ]
    }

    #[inline]
    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = self.0;
        (
            m[0][0] as f64 * x + m[0][1] as f64 * y,
            m[1][0] as f64 * x + m[1][1] as f64 * y,
        )
    }
}

/// One smooth perturbation term `x ↦ x + a·sin(2π m·x)·v`.
///
/// The term preserves area exactly when `m·v = 0` (a genuine shear); otherwise
/// its Jacobian determinant is `1 + 2πa (m·v) cos(2π m·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shear {
    pub frequency: [i64; 2],
    pub direction: [f64; 2],
    pub amplitude: f64,
}

impl Shear {
    #[inline]
    fn phase(&self, x: f64, y: f64) -> f64 {
        TAU * (self.frequency[0] as f64 * x + self.frequency[1] as f64 * y)
    }

    #[inline]
    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let s = self.amplitude * self.phase(x, y).sin();
        (x + s * self.direction[0], y + s * self.direction[1])
    }

    fn m_dot_v(&self) -> f64 {
        self.frequency[0] as f64 * self.direction[0] + self.frequency[1] as f64 * self.direction[1]
    }

    #[inline]
    fn det(&self, x: f64, y: f64) -> f64 {
        1.0 + TAU * self.amplitude * self.m_dot_v() * self.phase(x, y).cos()
    }

    fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let c = TAU * self.amplitude * self.phase(x, y).cos();
        let (m, v) = (self.frequency, self.direction);
        [
            [1.0 + c * v[0] * m[0] as f64, c * v[0] * m[1] as f64],
            [c * v[1] * m[0] as f64, 1.0 + c * v[1] * m[1] as f64],
        ]
    }

    pub fn is_area_preserving(&self) -> bool {
        self.m_dot_v() == 0.0
    }
}

/// Vertical strip `[start, next start) × [0,1)` mapped affinely by
/// `x ↦ matrix·x + offset (mod 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub matrix: IntMatrix,
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    AnosovPerturbedCat,
    PiecewiseToral,
}

/// A fiber map `T_ω` of the torus: either a hyperbolic automorphism composed
/// with smooth perturbation terms, or a piecewise toral automorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicMap {
    kind: MapKind,
    base: IntMatrix,
    perturbations: Vec<Shear>,
    pieces: Vec<Piece>,
}

/// Anything that moves points of the torus. Ulam discretisation only needs
/// this much.
pub trait TorusMap: Sync {
    fn apply(&self, x: TorusPoint) -> Result<TorusPoint>;

    fn is_volume_preserving(&self) -> bool;
}

fn check_base(base: &IntMatrix) -> Result<()> {
    if !base.is_hyperbolic_automorphism() {
        return Err(Error::InvalidMap(format!(
            "matrix {:?} must have det = ±1 and |trace| > 2",
            base.0
        )));
    }
    Ok(())
}

impl HyperbolicMap {
    /// The unperturbed automorphism `x ↦ Ax mod 1`.
    pub fn linear(base: IntMatrix) -> Result<Self> {
        Self::perturbed(base, Vec::new(), 0.0)
    }

    /// `T = A ∘ P_K ∘ … ∘ P_1` with every `|a_k| ≤ delta`.
    pub fn perturbed(base: IntMatrix, perturbations: Vec<Shear>, delta: f64) -> Result<Self> {
        check_base(&base)?;
        for (i, p) in perturbations.iter().enumerate() {
            if !p.amplitude.is_finite() || p.amplitude.abs() > delta {
                return Err(Error::InvalidMap(format!(
                    "perturbation {i}: |amplitude| = {} exceeds cap {delta}",
                    p.amplitude.abs()
                )));
            }
            if !p.direction.iter().all(|d| d.is_finite()) {
                return Err(Error::InvalidMap(format!("perturbation {i}: non-finite direction")));
            }
            if (TAU * p.amplitude * p.m_dot_v()).abs() >= 1.0 {
                return Err(Error::InvalidMap(format!(
                    "perturbation {i} is not invertible (|2πa m·v| ≥ 1)"
                )));
            }
        }
        Ok(Self {
            kind: MapKind::AnosovPerturbedCat,
            base,
            perturbations,
            pieces: Vec::new(),
        })
    }

    /// Piecewise automorphism on vertical strips. `base` is the reference
    /// hyperbolic matrix used for cone certificates.
    pub fn piecewise(base: IntMatrix, mut pieces: Vec<Piece>) -> Result<Self> {
        check_base(&base)?;
        if pieces.len() < 2 {
            return Err(Error::InvalidMap("a piecewise map needs at least two pieces".into()));
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        if pieces[0].start != 0.0 {
            return Err(Error::InvalidMap("the first piece must start at x = 0".into()));
        }
        for w in pieces.windows(2) {
            if w[1].start <= w[0].start || w[1].start >= 1.0 {
                return Err(Error::InvalidMap(
                    "piece starts must be strictly increasing inside [0, 1)".into(),
                ));
            }
        }
        for p in &pieces {
            check_base(&p.matrix)?;
        }
        Ok(Self {
            kind: MapKind::PiecewiseToral,
            base,
            perturbations: Vec::new(),
            pieces,
        })
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn base(&self) -> &IntMatrix {
        &self.base
    }

    pub fn perturbations(&self) -> &[Shear] {
        &self.perturbations
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_of(&self, x: TorusPoint) -> Result<&Piece> {
        let s = x.x();
        if self.pieces.iter().any(|p| p.start == s) {
            return Err(Error::BoundaryPoint { x: x.x(), y: x.y() });
        }
        let idx = self.pieces.partition_point(|p| p.start < s);
        Ok(&self.pieces[idx - 1])
    }

    /// `T(x) mod 1`.
    pub fn apply(&self, x: TorusPoint) -> Result<TorusPoint> {
        match self.kind {
            MapKind::AnosovPerturbedCat => {
                let (mut u, mut v) = (x.x(), x.y());
                for p in &self.perturbations {
                    (u, v) = p.apply(u, v);
                }
                let (a, b) = self.base.apply(u, v);
                Ok(TorusPoint::wrapped(a, b))
            }
            MapKind::PiecewiseToral => {
                let piece = self.piece_of(x)?;
                let (a, b) = piece.matrix.apply(x.x(), x.y());
                Ok(TorusPoint::wrapped(a + piece.offset[0], b + piece.offset[1]))
            }
        }
    }

    /// Derivative `DT(x)`.
    pub fn jacobian(&self, x: TorusPoint) -> Result<[[f64; 2]; 2]> {
        match self.kind {
            MapKind::AnosovPerturbedCat => {
                let mut acc = [[1.0, 0.0], [0.0, 1.0]];
                let (mut u, mut v) = (x.x(), x.y());
                for p in &self.perturbations {
                    acc = matmul(p.jacobian(u, v), acc);
                    (u, v) = p.apply(u, v);
                }
                Ok(matmul(self.base.as_f64(), acc))
            }
            MapKind::PiecewiseToral => Ok(self.piece_of(x)?.matrix.as_f64()),
        }
    }

    /// `|det DT(x)|`, the factor by which `T` stretches area at `x`.
    pub fn jacobian_det(&self, x: TorusPoint) -> Result<f64> {
        match self.kind {
            MapKind::AnosovPerturbedCat => {
                let mut det = self.base.det() as f64;
                let (mut u, mut v) = (x.x(), x.y());
                for p in &self.perturbations {
                    det *= p.det(u, v);
                    (u, v) = p.apply(u, v);
                }
                Ok(det.abs())
            }
            MapKind::PiecewiseToral => Ok((self.piece_of(x)?.matrix.det() as f64).abs()),
        }
    }

    /// Whether `T` preserves Lebesgue measure. For the piecewise kind this
    /// holds when every piece is `x ↦ A(x + (0, c_i))`, i.e. a vertical
    /// rotation of its strip followed by a common `A`; other piecewise maps
    /// are treated as dissipative.
    pub fn is_volume_preserving(&self) -> bool {
        match self.kind {
            MapKind::AnosovPerturbedCat => self.perturbations.iter().all(Shear::is_area_preserving),
            MapKind::PiecewiseToral => {
                let a = self.pieces[0].matrix;
                let m = a.0;
                let det = a.det() as f64;
                self.pieces.iter().all(|p| {
                    let pre_x = (m[1][1] as f64 * p.offset[0] - m[0][1] as f64 * p.offset[1]) / det;
                    p.matrix == a && (pre_x - pre_x.round()).abs() < 1e-12
                })
            }
        }
    }

    /// Smallest one-step expansion of tangent vectors started in the unstable
    /// direction of the base matrix, over `n_orbits` random orbits of length
    /// `len`. A value above one certifies expansion along the sampled orbits.
    pub fn expansion_certificate(&self, n_orbits: usize, len: usize, seed: u64) -> Result<f64> {
        let dir = self.base.unstable_direction();
        let mut min_factor = f64::INFINITY;
        for orbit in 0..n_orbits {
            let mut rng = seed::substream(seed, orbit as u64);
            let mut x = TorusPoint::new(rng.gen(), rng.gen());
            let mut v = dir;
            for _ in 0..len {
                let j = match self.jacobian(x) {
                    Ok(j) => j,
                    Err(Error::BoundaryPoint { .. }) => break,
                    Err(e) => return Err(e),
                };
                let w = [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
                let n = w[0].hypot(w[1]);
                min_factor = min_factor.min(n);
                v = [w[0] / n, w[1] / n];
                x = match self.apply(x) {
                    Ok(y) => y,
                    Err(Error::BoundaryPoint { .. }) => break,
                    Err(e) => return Err(e),
                };
            }
        }
        Ok(min_factor)
    }
}

impl TorusMap for HyperbolicMap {
    fn apply(&self, x: TorusPoint) -> Result<TorusPoint> {
        HyperbolicMap::apply(self, x)
    }

    fn is_volume_preserving(&self) -> bool {
        HyperbolicMap::is_volume_preserving(self)
    }
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> HyperbolicMap {
        HyperbolicMap::linear(IntMatrix::CAT).unwrap()
    }

    #[test]
    fn cat_map_fixed_point_and_half_point() {
        assert_eq!(cat().apply(TorusPoint::new(0.0, 0.0)).unwrap(), TorusPoint::new(0.0, 0.0));
        assert_eq!(cat().apply(TorusPoint::new(0.5, 0.5)).unwrap(), TorusPoint::new(0.5, 0.0));
    }

    #[test]
    fn perturbed_map_matches_high_precision_reference() {
        // reference evaluated with 50-digit arithmetic
        let x_ref = 0.239_980_267_284_282_715_619_523_368_068_635;
        let y_ref = 0.999_980_267_284_282_715_619_523_368_068_635;
        let map = HyperbolicMap::perturbed(
            IntMatrix::CAT,
            vec![
                Shear { frequency: [0, 1], direction: [1.0, 0.0], amplitude: 0.01 },
                Shear { frequency: [1, 0], direction: [0.0, 1.0], amplitude: 0.01 },
            ],
            0.05,
        )
        .unwrap();
        let y = map.apply(TorusPoint::new(0.25, 0.75)).unwrap();
        assert!((y.x() - x_ref).abs() < 1e-15, "{}", y.x());
        assert!((y.y() - y_ref).abs() < 1e-15, "{}", y.y());
    }

    #[test]
    fn jacobian_det_matches_finite_differences() {
        let map = HyperbolicMap::perturbed(
            IntMatrix::CAT,
            vec![Shear { frequency: [1, 0], direction: [1.0, 0.0], amplitude: 0.03 }],
            0.05,
        )
        .unwrap();
        let x = TorusPoint::new(0.1, 0.2);
        let h = 1e-6;
        let f = |u: f64, v: f64| {
            let p = map.apply(TorusPoint::new(u, v)).unwrap();
            [p.x(), p.y()]
        };
        let unwrap = |d: f64| d - d.round();
        let col = |dx: f64, dy: f64| {
            let (a, b) = (f(x.x() + dx, x.y() + dy), f(x.x() - dx, x.y() - dy));
            [unwrap(a[0] - b[0]) / (2.0 * h), unwrap(a[1] - b[1]) / (2.0 * h)]
        };
        let (c1, c2) = (col(h, 0.0), col(0.0, h));
        let fd = (c1[0] * c2[1] - c1[1] * c2[0]).abs();
        let exact = map.jacobian_det(x).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-4, "{fd} vs {exact}");
        assert!((exact - 1.0).abs() > 0.05, "perturbation should be visibly dissipative");
    }

    #[test]
    fn shears_preserve_area() {
        let map = HyperbolicMap::perturbed(
            IntMatrix::CAT,
            vec![
                Shear { frequency: [0, 1], direction: [1.0, 0.0], amplitude: 0.03 },
                Shear { frequency: [2, 1], direction: [-0.5, 1.0], amplitude: 0.02 },
            ],
            0.05,
        )
        .unwrap();
        assert!(map.is_volume_preserving());
        let mut rng = seed::substream(3, 0);
        for _ in 0..10_000 {
            let x = TorusPoint::new(rng.gen(), rng.gen());
            assert!((map.jacobian_det(x).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn automorphisms_have_unit_determinant() {
        let m = HyperbolicMap::linear(IntMatrix([[3, 1], [2, 1]])).unwrap();
        assert_eq!(m.jacobian_det(TorusPoint::new(0.3, 0.7)).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(HyperbolicMap::linear(IntMatrix([[1, 1], [0, 1]])).is_err());
        assert!(HyperbolicMap::linear(IntMatrix([[2, 0], [0, 1]])).is_err());
        let big = Shear { frequency: [0, 1], direction: [1.0, 0.0], amplitude: 0.1 };
        assert!(HyperbolicMap::perturbed(IntMatrix::CAT, vec![big], 0.05).is_err());
        let non_invertible = Shear { frequency: [1, 0], direction: [1.0, 0.0], amplitude: 0.2 };
        assert!(HyperbolicMap::perturbed(IntMatrix::CAT, vec![non_invertible], 0.5).is_err());
    }

    fn two_strips(offset: [f64; 2]) -> HyperbolicMap {
        HyperbolicMap::piecewise(
            IntMatrix::CAT,
            vec![
                Piece { start: 0.0, matrix: IntMatrix::CAT, offset: [0.0, 0.0] },
                Piece { start: 0.5, matrix: IntMatrix::CAT, offset },
            ],
        )
        .unwrap()
    }

    #[test]
    fn piecewise_boundary_is_an_error() {
        let m = two_strips([0.25, 0.25]);
        for x in [0.0, 0.5] {
            assert!(matches!(m.apply(TorusPoint::new(x, 0.3)), Err(Error::BoundaryPoint { .. })));
        }
        assert!(m.apply(TorusPoint::new(0.25, 0.3)).is_ok());
    }

    #[test]
    fn piecewise_volume_preservation_is_detected() {
        assert!(two_strips([0.25, 0.25]).is_volume_preserving());
        assert!(!two_strips([0.25, 0.0]).is_volume_preserving());
        assert!(HyperbolicMap::piecewise(IntMatrix::CAT, vec![Piece { start: 0.0, matrix: IntMatrix::CAT, offset: [0.0; 2] }]).is_err());
    }

    #[test]
    fn expansion_is_certified() {
        for map in [cat(), two_strips([0.25, 0.25])] {
            let c = map.expansion_certificate(1000, 50, 11).unwrap();
            assert!(c > 1.5, "{c}");
        }
    }
}
