use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many orbits to draw and how long to run them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub seed: u64,
    pub n_samples: usize,
    /// Length of the push-forward from `σ^{−burn_in}ω` used to sample `μ_ω`.
    pub burn_in: usize,
    /// Birkhoff sum length.
    pub n: usize,
    pub batches: usize,
}

impl SamplePlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 100 {
            return Err(Error::InvalidArgument(format!("need at least 100 samples, got {}", self.n_samples)));
        }
        if self.batches == 0 || self.n_samples % self.batches != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} batches do not evenly divide {} samples",
                self.batches, self.n_samples
            )));
        }
        Ok(())
    }

    pub fn batch_size(&self) -> usize {
        self.n_samples / self.batches
    }
}
