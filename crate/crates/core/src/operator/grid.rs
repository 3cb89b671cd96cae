use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::TorusPoint;
use crate::error::{Error, Result};

/// Uniform partition of `[0,1)²` into `k × k` squares. Cell `i + k·j` covers
/// `[i/k, (i+1)/k) × [j/k, (j+1)/k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UlamGrid {
    k: usize,
}

impl UlamGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("grid needs k >= 2, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> usize {
        self.k * self.k
    }

    pub fn side(&self) -> f64 {
        1.0 / self.k as f64
    }

    #[inline]
    pub fn cell_of(&self, x: TorusPoint) -> usize {
        let k = self.k;
        let i = ((x.x() * k as f64) as usize).min(k - 1);
        let j = ((x.y() * k as f64) as usize).min(k - 1);
        i + k * j
    }

    /// Lower-left corner of a cell.
    pub fn origin(&self, cell: usize) -> (f64, f64) {
        let s = self.side();
        ((cell % self.k) as f64 * s, (cell / self.k) as f64 * s)
    }

    /// Index of the coarse cell containing fine cell `cell`; `self.k` must be
    /// a multiple of `coarse.k`.
    fn coarse_index(&self, cell: usize, coarse: &UlamGrid) -> usize {
        let r = self.k / coarse.k;
        let (i, j) = (cell % self.k, cell / self.k);
        i / r + coarse.k * (j / r)
    }

    pub fn refines(&self, coarse: &UlamGrid) -> bool {
        self.k % coarse.k == 0
    }
}

/// Cell masses of a (signed or complex) measure on an [`UlamGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector<T = f64> {
    pub grid: UlamGrid,
    pub weights: Vec<T>,
}

pub type TwistedDensity = DensityVector<Complex64>;

impl DensityVector<f64> {
    /// Lebesgue measure.
    pub fn uniform(grid: UlamGrid) -> Self {
        let n = grid.cells();
        Self { grid, weights: vec![1.0 / n as f64; n] }
    }

    pub fn mass(&self) -> f64 {
        crate::stats::compensated_sum(self.weights.iter().copied())
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        crate::stats::compensated_sum(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()))
    }

    pub fn l1_norm(&self) -> f64 {
        crate::stats::compensated_sum(self.weights.iter().map(|a| a.abs()))
    }

    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        self.weights.iter_mut().for_each(|w| *w /= m);
        self
    }

    /// Empirical measure of a point cloud.
    pub fn histogram(grid: UlamGrid, points: &[TorusPoint]) -> Self {
        let mut weights = vec![0.0; grid.cells()];
        for p in points {
            weights[grid.cell_of(*p)] += 1.0;
        }
        let n = points.len().max(1) as f64;
        weights.iter_mut().for_each(|w| *w /= n);
        Self { grid, weights }
    }

    /// Push the cell masses onto a coarser grid.
    pub fn aggregate(&self, coarse: UlamGrid) -> Result<Self> {
        if !self.grid.refines(&coarse) {
            return Err(Error::InvalidArgument(format!(
                "grid {} does not refine grid {}",
                self.grid.k(),
                coarse.k()
            )));
        }
        let mut weights = vec![0.0; coarse.cells()];
        for (c, w) in self.weights.iter().enumerate() {
            weights[self.grid.coarse_index(c, &coarse)] += w;
        }
        Ok(Self { grid: coarse, weights })
    }

    /// `∫ f dμ` where `f` is given through its cell averages.
    pub fn integrate(&self, cell_averages: &[f64]) -> f64 {
        crate::stats::compensated_sum(self.weights.iter().zip(cell_averages).map(|(w, f)| w * f))
    }

    /// Discrete total variation of the density across neighbouring cells
    /// (periodic), normalised to approximate `∫|∂₁h| + |∂₂h|`.
    pub fn total_variation(&self) -> f64 {
        total_variation(self.grid, &self.weights)
    }
}

impl DensityVector<Complex64> {
    pub fn mass(&self) -> Complex64 {
        self.weights.iter().sum()
    }

    pub fn from_real(d: &DensityVector<f64>) -> Self {
        Self {
            grid: d.grid,
            weights: d.weights.iter().map(|&w| Complex64::new(w, 0.0)).collect(),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    pub fn total_variation(&self) -> f64 {
        total_variation(self.grid, &self.weights)
    }

    /// Coarse-grid L¹ norm after aggregation.
    pub fn aggregated_l1(&self, coarse: UlamGrid) -> Result<f64> {
        if !self.grid.refines(&coarse) {
            return Err(Error::InvalidArgument("grids do not nest".into()));
        }
        let mut weights = vec![Complex64::new(0.0, 0.0); coarse.cells()];
        for (c, w) in self.weights.iter().enumerate() {
            weights[self.grid.coarse_index(c, &coarse)] += w;
        }
        Ok(weights.iter().map(|w| w.norm()).sum())
    }
}

fn total_variation<T>(grid: UlamGrid, w: &[T]) -> f64
where
    T: std::ops::Sub<Output = T> + Copy + Abs,
{
    let k = grid.k();
    let mut tv = 0.0;
    for j in 0..k {
        for i in 0..k {
            let c = i + k * j;
            let right = (i + 1) % k + k * j;
            let up = i + k * ((j + 1) % k);
            tv += (w[right] - w[c]).abs_val();
            tv += (w[up] - w[c]).abs_val();
        }
    }
    // cell masses carry a factor 1/k², neighbour differences another 1/k
    tv * k as f64
}

trait Abs {
    fn abs_val(self) -> f64;
}

impl Abs for f64 {
    fn abs_val(self) -> f64 {
        self.abs()
    }
}

impl Abs for Complex64 {
    fn abs_val(self) -> f64 {
        self.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_partition_the_square() {
        let g = UlamGrid::new(8).unwrap();
        assert_eq!(g.cell_of(TorusPoint::new(0.0, 0.0)), 0);
        assert_eq!(g.cell_of(TorusPoint::new(0.999_999, 0.999_999)), 63);
        assert_eq!(g.cell_of(TorusPoint::new(0.125, 0.0)), 1);
        assert_eq!(g.cell_of(TorusPoint::new(0.0, 0.125)), 8);
        assert_eq!(g.origin(9), (0.125, 0.125));
        assert!(UlamGrid::new(1).is_err());
    }

    #[test]
    fn aggregation_preserves_mass() {
        let g = UlamGrid::new(8).unwrap();
        let d = DensityVector {
            grid: g,
            weights: (0..64).map(|i| i as f64).collect(),
        }
        .normalized();
        let c = d.aggregate(UlamGrid::new(4).unwrap()).unwrap();
        assert!((c.mass() - 1.0).abs() < 1e-14);
        assert!(d.aggregate(UlamGrid::new(3).unwrap()).is_err());
    }

    #[test]
    fn uniform_has_no_variation() {
        let d = DensityVector::uniform(UlamGrid::new(16).unwrap());
        assert_eq!(d.total_variation(), 0.0);
        assert!((d.mass() - 1.0).abs() < 1e-14);
    }
}
