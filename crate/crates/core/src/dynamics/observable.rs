use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::torus::TorusPoint;
use crate::error::{Error, Result};

/// `c·cos(2π m·x) + s·sin(2π m·x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub frequency: [i64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Finite trigonometric polynomial on the torus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub terms: Vec<TrigTerm>,
}

impl TrigPoly {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    pub fn cos(frequency: [i64; 2], coefficient: f64) -> Self {
        Self::new(vec![TrigTerm { frequency, cos: coefficient, sin: 0.0 }])
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn eval(&self, x: TorusPoint) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let ph = TAU * (t.frequency[0] as f64 * x.x() + t.frequency[1] as f64 * x.y());
                let mut v = 0.0;
                if t.cos != 0.0 {
                    v += t.cos * ph.cos();
                }
                if t.sin != 0.0 {
                    v += t.sin * ph.sin();
                }
                v
            })
            .sum()
    }

    /// Lebesgue integral over the torus (only the zero mode contributes).
    pub fn lebesgue_mean(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.frequency == [0, 0])
            .map(|t| t.cos)
            .sum()
    }

    /// Exact average over the square `[x0, x0+side) × [y0, y0+side)`.
    pub fn cell_average(&self, x0: f64, y0: f64, side: f64) -> f64 {
        fn axis(m: i64, a: f64, side: f64) -> Complex64 {
            if m == 0 {
                return Complex64::new(1.0, 0.0);
            }
            let w = TAU * m as f64;
            let hi = Complex64::from_polar(1.0, w * (a + side));
            let lo = Complex64::from_polar(1.0, w * a);
            (hi - lo) / Complex64::new(0.0, w * side)
        }
        self.terms
            .iter()
            .map(|t| {
                let z = axis(t.frequency[0], x0, side) * axis(t.frequency[1], y0, side);
                t.cos * z.re + t.sin * z.im
            })
            .sum()
    }

    /// Bound on `sup|p| + sup|∇p|`.
    pub fn c1_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let amp = t.cos.abs() + t.sin.abs();
                let m = (t.frequency[0] as f64).hypot(t.frequency[1] as f64);
                amp * (1.0 + TAU * m)
            })
            .sum()
    }
}

/// Observable `g(ω, x) = p_{ω₀}(x) + r(x) − r(T_{ω₀}x) − c_{ω₀}`.
///
/// `p_a` is a per-symbol trigonometric polynomial, the optional `r` adds an
/// explicit coboundary term, and `c_a` are centering offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    per_symbol: Vec<TrigPoly>,
    coboundary: Option<TrigPoly>,
    offsets: Vec<f64>,
}

impl Observable {
    pub fn new(per_symbol: Vec<TrigPoly>, coboundary: Option<TrigPoly>) -> Result<Self> {
        if per_symbol.is_empty() {
            return Err(Error::InvalidObservable("no symbols".into()));
        }
        let all_empty = per_symbol.iter().all(TrigPoly::is_empty)
            && coboundary.as_ref().map_or(true, TrigPoly::is_empty);
        if all_empty {
            return Err(Error::InvalidObservable("observable has no terms".into()));
        }
        for (a, p) in per_symbol.iter().enumerate() {
            for t in &p.terms {
                if !(t.cos.is_finite() && t.sin.is_finite()) {
                    return Err(Error::InvalidObservable(format!("symbol {a}: non-finite coefficient")));
                }
            }
        }
        let offsets = vec![0.0; per_symbol.len()];
        Ok(Self { per_symbol, coboundary, offsets })
    }

    /// `g ≡ 0` on an alphabet of the given size.
    pub fn zero(alphabet: usize) -> Self {
        Self {
            per_symbol: vec![TrigPoly::default(); alphabet],
            coboundary: None,
            offsets: vec![0.0; alphabet],
        }
    }

    /// Pure coboundary `g = r − r∘T_{ω₀}`.
    pub fn coboundary(alphabet: usize, r: TrigPoly) -> Self {
        Self {
            per_symbol: vec![TrigPoly::default(); alphabet],
            coboundary: Some(r),
            offsets: vec![0.0; alphabet],
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.per_symbol.len()
    }

    pub fn polynomial(&self, symbol: usize) -> &TrigPoly {
        &self.per_symbol[symbol]
    }

    pub fn coboundary_term(&self) -> Option<&TrigPoly> {
        self.coboundary.as_ref()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        if offsets.len() != self.per_symbol.len() || offsets.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidObservable("offset vector does not match alphabet".into()));
        }
        self.offsets = offsets;
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.per_symbol
            .iter()
            .all(|p| p.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0))
            && self
                .coboundary
                .as_ref()
                .map_or(true, |r| r.terms.iter().all(|t| t.cos == 0.0 && t.sin == 0.0))
            && self.offsets.iter().all(|&c| c == 0.0)
    }

    /// Whether evaluation needs the image `T_{ω₀}x`.
    pub fn needs_image(&self) -> bool {
        self.coboundary.is_some()
    }

    /// `g(ω, x)` given the symbol `ω₀` and the image `T_{ω₀}x`.
    #[inline]
    pub fn eval(&self, symbol: usize, x: TorusPoint, image: TorusPoint) -> f64 {
        let mut v = self.per_symbol[symbol].eval(x) - self.offsets[symbol];
        if let Some(r) = &self.coboundary {
            v += r.eval(x) - r.eval(image);
        }
        v
    }

    /// Bound on the C¹ size over all symbols; `map_lipschitz` bounds `‖DT‖`
    /// and only matters for the coboundary term.
    pub fn c1_bound(&self, map_lipschitz: f64) -> f64 {
        let poly = self
            .per_symbol
            .iter()
            .zip(&self.offsets)
            .map(|(p, c)| p.c1_bound() + c.abs())
            .fold(0.0, f64::max);
        let cob = self
            .coboundary
            .as_ref()
            .map_or(0.0, |r| r.c1_bound() * (1.0 + map_lipschitz.max(1.0)));
        poly + cob
    }
}
