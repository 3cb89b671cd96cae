use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::plan::SamplePlan;
use crate::dynamics::{OmegaPath, RandomSystem, TorusPoint};
use crate::error::{Error, Result};
use crate::seed;

const CHUNK: usize = 2048;
const MAX_REDRAWS: usize = 1000;

/// Points drawn from `μ_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuSamples {
    pub points: Vec<TorusPoint>,
    /// Draws rejected because an orbit hit a partition boundary.
    pub resampled: usize,
}

/// Birkhoff sums of every sample at each checkpoint length.
#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffSamples {
    pub checkpoints: Vec<usize>,
    /// `sums[c][i]` is `S_{checkpoints[c]} g(ω, x_i)`.
    pub sums: Vec<Vec<f64>>,
    pub resampled: usize,
}

impl BirkhoffSamples {
    pub fn at(&self, n: usize) -> Option<&[f64]> {
        self.checkpoints.iter().position(|&c| c == n).map(|i| self.sums[i].as_slice())
    }
}

/// Run `body` on every sample index with its own generator, in parallel
/// chunks, and return the results in index order.
fn per_sample<T: Send>(
    plan: &SamplePlan,
    body: impl Fn(usize, &mut ChaCha8Rng) -> Result<(T, usize)> + Sync,
) -> Result<(Vec<T>, usize)> {
    let chunks: Vec<(Vec<T>, usize)> = (0..plan.n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(plan.n_samples);
            let mut out = Vec::with_capacity(range.len());
            let mut redrawn = 0;
            for i in range {
                let mut rng = seed::substream(plan.seed, i as u64);
                let (v, r) = body(i, &mut rng)?;
                out.push(v);
                redrawn += r;
            }
            Ok((out, redrawn))
        })
        .collect::<Result<_>>()?;
    let resampled = chunks.iter().map(|c| c.1).sum();
    Ok((chunks.into_iter().flat_map(|c| c.0).collect(), resampled))
}

/// Draw `y` uniformly and run `f` on it, redrawing when a boundary is hit.
fn with_redraws<T>(rng: &mut ChaCha8Rng, mut f: impl FnMut(TorusPoint) -> Result<T>) -> Result<(T, usize)> {
    for redraws in 0..=MAX_REDRAWS {
        let y = TorusPoint::new(rng.gen(), rng.gen());
        match f(y) {
            Ok(v) => return Ok((v, redraws)),
            Err(Error::BoundaryPoint { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidArgument(format!("more than {MAX_REDRAWS} boundary hits for one sample")))
}

/// `x = T^{(burn_in)}_{σ^{−burn_in}ω}(y)` with `y` uniform.
pub fn sample_mu_omega(system: &RandomSystem, omega: &OmegaPath, plan: &SamplePlan) -> Result<MuSamples> {
    plan.validate()?;
    let past = omega.window(-(plan.burn_in as i64), plan.burn_in);
    let (points, resampled) = per_sample(plan, |_, rng| with_redraws(rng, |y| system.push_forward(&past, y)))?;
    Ok(MuSamples { points, resampled })
}

/// `S_n g(ω, x)` for `x ~ μ_ω` at every `n` in `checkpoints` (sorted,
/// at most `plan.n`).
pub fn birkhoff_sums(
    system: &RandomSystem,
    omega: &OmegaPath,
    plan: &SamplePlan,
    checkpoints: &[usize],
) -> Result<BirkhoffSamples> {
    plan.validate()?;
    let mut cps = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    if cps.last().is_some_and(|&c| c > plan.n) {
        return Err(Error::InvalidArgument("checkpoint beyond the plan's Birkhoff length".into()));
    }
    let past = omega.window(-(plan.burn_in as i64), plan.burn_in);
    let future = omega.window(0, plan.n);
    let (rows, resampled) = per_sample(plan, |_, rng| {
        with_redraws(rng, |y| {
            let x = system.push_forward(&past, y)?;
            let mut out = Vec::with_capacity(cps.len());
            system.birkhoff_checkpoints(&future, x, &cps, &mut out)?;
            Ok(out)
        })
    })?;
    let sums = (0..cps.len()).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    Ok(BirkhoffSamples { checkpoints: cps, sums, resampled })
}

/// Observable values `g(τʲ(ω_i, x))`, `j < len`, for `x ~ μ_{ω_i}` where
/// sample `i` uses `ω_i = σ^{i·stride}ω`. A zero stride keeps every sample
/// on the same fiber; a positive one samples the skew product.
pub fn observable_orbits(
    system: &RandomSystem,
    omega: &OmegaPath,
    plan: &SamplePlan,
    len: usize,
    stride: i64,
) -> Result<(Vec<Vec<f64>>, usize)> {
    plan.validate()?;
    let burn = plan.burn_in as i64;
    let fixed = (stride == 0).then(|| (omega.window(-burn, plan.burn_in), omega.window(0, len)));
    per_sample(plan, |i, rng| {
        let owned;
        let (past, future) = match &fixed {
            Some((p, f)) => (p, f),
            None => {
                let w = omega.shift(i as i64 * stride);
                owned = (w.window(-burn, plan.burn_in), w.window(0, len));
                (&owned.0, &owned.1)
            }
        };
        with_redraws(rng, |y| {
            let x = system.push_forward(past, y)?;
            let mut orbit = Vec::with_capacity(len);
            system.observable_orbit(future, x, &mut orbit)?;
            Ok(orbit)
        })
    })
}
