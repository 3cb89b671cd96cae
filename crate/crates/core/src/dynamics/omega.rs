use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Probability vector over the map alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "symbol {i} has non-positive probability {}",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        Ok(Self { probs, cumulative })
    }

    pub fn uniform(alphabet: usize) -> Result<Self> {
        Self::new(vec![1.0 / alphabet as f64; alphabet])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF lookup of a uniform variate.
    #[inline]
    pub fn draw(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

/// One realisation `ω` of the i.i.d. two-sided shift over the map alphabet.
///
/// Symbols are a counter-based function of `(seed, index)`, so both `σ` and
/// `σ⁻¹` are O(1) cursor moves and any window of the path can be produced
/// without touching the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaPath {
    seed: u64,
    distribution: Arc<Distribution>,
    cursor: i64,
    constant: Option<usize>,
}

impl OmegaPath {
    pub fn new(seed: u64, distribution: Distribution) -> Self {
        Self {
            seed,
            distribution: Arc::new(distribution),
            cursor: 0,
            constant: None,
        }
    }

    /// The periodic path `(…, a, a, a, …)`.
    pub fn constant(symbol: usize, distribution: Distribution) -> Result<Self> {
        if symbol >= distribution.len() {
            return Err(Error::InvalidArgument(format!(
                "symbol {symbol} outside alphabet of size {}",
                distribution.len()
            )));
        }
        Ok(Self {
            seed: 0,
            distribution: Arc::new(distribution),
            cursor: 0,
            constant: Some(symbol),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cursor(&self) -> i64 {
        self.cursor
    }

    pub fn alphabet_size(&self) -> usize {
        self.distribution.len()
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn is_constant(&self) -> Option<usize> {
        self.constant
    }

    /// `ω_i`, the symbol selecting the map applied at time `i`.
    #[inline]
    pub fn symbol(&self, i: i64) -> usize {
        match self.constant {
            Some(a) => a,
            None => {
                let u = seed::uniform_at(self.seed, self.cursor.wrapping_add(i) as u64);
                self.distribution.draw(u)
            }
        }
    }

    /// `σᵏω`; `k` may be negative.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            cursor: self.cursor + k,
            ..self.clone()
        }
    }

    /// Symbols `ω_start, …, ω_{start+len-1}` as bytes.
    pub fn window(&self, start: i64, len: usize) -> Vec<u8> {
        (0..len as i64).map(|i| self.symbol(start + i) as u8).collect()
    }
}
