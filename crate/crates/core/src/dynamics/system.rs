use super::map::HyperbolicMap;
use super::observable::Observable;
use super::omega::{Distribution, OmegaPath};
use super::torus::TorusPoint;
use crate::error::{Error, Result};

/// Fiber maps indexed by symbol, the driving distribution, and the
/// observable whose Birkhoff sums are studied.
#[derive(Debug, Clone)]
pub struct RandomSystem {
    maps: Vec<HyperbolicMap>,
    distribution: Distribution,
    observable: Observable,
}

/// A point `(ω, x)` of the skew product.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewState {
    pub omega: OmegaPath,
    pub x: TorusPoint,
}

impl RandomSystem {
    pub fn new(maps: Vec<HyperbolicMap>, distribution: Distribution, observable: Observable) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidMap("no fiber maps".into()));
        }
        if distribution.len() != maps.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for {} maps",
                distribution.len(),
                maps.len()
            )));
        }
        if observable.alphabet_size() != maps.len() {
            return Err(Error::InvalidObservable(format!(
                "observable defined on {} symbols, system has {}",
                observable.alphabet_size(),
                maps.len()
            )));
        }
        Ok(Self { maps, distribution, observable })
    }

    pub fn alphabet_size(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[HyperbolicMap] {
        &self.maps
    }

    pub fn map(&self, symbol: usize) -> &HyperbolicMap {
        &self.maps[symbol]
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    /// Same dynamics with a different observable.
    pub fn with_observable(&self, observable: Observable) -> Result<Self> {
        Self::new(self.maps.clone(), self.distribution.clone(), observable)
    }

    pub fn is_volume_preserving(&self) -> bool {
        self.maps.iter().all(HyperbolicMap::is_volume_preserving)
    }

    /// Driving path with the system's distribution.
    pub fn path(&self, seed: u64) -> OmegaPath {
        OmegaPath::new(seed, self.distribution.clone())
    }

    /// The constant path `(…, a, a, …)`, a fixed point of the shift.
    pub fn constant_path(&self, symbol: usize) -> Result<OmegaPath> {
        OmegaPath::constant(symbol, self.distribution.clone())
    }

    fn check_path(&self, omega: &OmegaPath) -> Result<()> {
        if omega.alphabet_size() != self.alphabet_size() {
            return Err(Error::InvalidArgument(format!(
                "path alphabet {} does not match system alphabet {}",
                omega.alphabet_size(),
                self.alphabet_size()
            )));
        }
        Ok(())
    }

    /// `g(ω, x)` for a fiber whose current symbol is `symbol`.
    pub fn observe(&self, symbol: usize, x: TorusPoint) -> Result<f64> {
        let image = if self.observable.needs_image() {
            self.maps[symbol].apply(x)?
        } else {
            x
        };
        Ok(self.observable.eval(symbol, x, image))
    }

    /// `T^{(n)}_ω x`.
    pub fn compose(&self, omega: &OmegaPath, n: usize, x: TorusPoint) -> Result<TorusPoint> {
        self.check_path(omega)?;
        (0..n as i64).try_fold(x, |y, i| self.maps[omega.symbol(i)].apply(y))
    }

    /// `S_n g(ω, x) = Σ_{i<n} g(σⁱω, T^{(i)}_ω x)`.
    pub fn birkhoff_sum(&self, omega: &OmegaPath, x: TorusPoint, n: usize) -> Result<f64> {
        self.check_path(omega)?;
        let mut y = x;
        let mut sum = 0.0;
        for i in 0..n as i64 {
            let a = omega.symbol(i);
            let next = self.maps[a].apply(y)?;
            sum += self.observable.eval(a, y, next);
            y = next;
        }
        Ok(sum)
    }

    /// `τ(ω, x) = (σω, T_ω x)`.
    pub fn skew_step(&self, state: &SkewState) -> Result<SkewState> {
        self.check_path(&state.omega)?;
        let x = self.maps[state.omega.symbol(0)].apply(state.x)?;
        Ok(SkewState { omega: state.omega.shift(1), x })
    }

    /// Push `x` through the maps named by `symbols`, in order.
    #[inline]
    pub fn push_forward(&self, symbols: &[u8], x: TorusPoint) -> Result<TorusPoint> {
        symbols.iter().try_fold(x, |y, &a| self.maps[a as usize].apply(y))
    }

    /// Birkhoff sums along a precomputed symbol window, recorded after each
    /// length in `checkpoints` (which must be nondecreasing and at most
    /// `symbols.len()`).
    pub fn birkhoff_checkpoints(
        &self,
        symbols: &[u8],
        x: TorusPoint,
        checkpoints: &[usize],
        out: &mut Vec<f64>,
    ) -> Result<()> {
        out.clear();
        let mut y = x;
        let mut sum = 0.0;
        let mut next_cp = 0;
        while next_cp < checkpoints.len() && checkpoints[next_cp] == 0 {
            out.push(0.0);
            next_cp += 1;
        }
        for (i, &a) in symbols.iter().enumerate() {
            if next_cp == checkpoints.len() {
                break;
            }
            let a = a as usize;
            let image = self.maps[a].apply(y)?;
            sum += self.observable.eval(a, y, image);
            y = image;
            while next_cp < checkpoints.len() && checkpoints[next_cp] == i + 1 {
                out.push(sum);
                next_cp += 1;
            }
        }
        if out.len() != checkpoints.len() {
            return Err(Error::InvalidArgument("checkpoint beyond symbol window".into()));
        }
        Ok(())
    }

    /// Values `g(τ^j(ω, x))` for `j < len`, along a symbol window.
    pub fn observable_orbit(&self, symbols: &[u8], x: TorusPoint, out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        let mut y = x;
        for &a in symbols {
            let a = a as usize;
            let image = self.maps[a].apply(y)?;
            out.push(self.observable.eval(a, y, image));
            y = image;
        }
        Ok(())
    }
}
