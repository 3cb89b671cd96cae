use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A piecewise map was evaluated exactly on a discontinuity line.
    #[error("point ({x}, {y}) lies on a partition boundary")]
    BoundaryPoint { x: f64, y: f64 },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The twisted pullback lost all of its mass; θ is outside the regime
    /// where the twisted cocycle stays close to the untwisted one.
    #[error("degenerate twist at theta = {re}{im:+}i: normaliser {magnitude:e}")]
    DegenerateTwist { re: f64, im: f64, magnitude: f64 },

    #[error("frame lost rank at step {step} (diagonal {diagonal:e})")]
    FrameDegeneracy { step: usize, diagonal: f64 },

    #[error("balancing did not converge after {iterations} sweeps (defect {defect:e})")]
    Balancing { iterations: usize, defect: f64 },

    #[error("eps = {eps} is outside the identifiable window (max slope {max_slope})")]
    OutOfRange { eps: f64, max_slope: f64 },

    #[error("theta grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    /// A check that assumes `Σ² > 0` was asked to run on a degenerate variance.
    #[error("variance {sigma2:e} is below the degeneracy threshold {threshold:e}")]
    DegenerateVariance { sigma2: f64, threshold: f64 },

    /// The local limit check was refused because the aperiodicity diagnostic
    /// failed at the listed `t`.
    #[error("aperiodicity diagnostic failed at t = {failing_t:?}")]
    AperiodicityFailed { failing_t: Vec<f64> },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
}
