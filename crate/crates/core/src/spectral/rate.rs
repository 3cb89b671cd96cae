use serde::{Deserialize, Serialize};

use super::moment::MomentFunction;
use crate::error::{Error, Result};

/// Convex, piecewise-quadratic interpolant of `Λ` on the real grid.
///
/// Slopes between grid points are projected onto nondecreasing sequences by
/// weighted pool-adjacent-violators. Nodal derivatives are the
/// length-weighted averages of neighbouring slopes (exact for quadratics),
/// and `Λ̃` integrates their piecewise-linear interpolant starting from the
/// estimate at `θ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexFit {
    pub theta: Vec<f64>,
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
}

/// Weighted isotonic regression (nondecreasing).
fn pool_adjacent_violators(y: &[f64], w: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2, c2) = blocks.pop().unwrap();
            let (m1, w1, c1) = blocks.pop().unwrap();
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, c1 + c2));
        }
    }
    blocks.iter().flat_map(|&(m, _, c)| std::iter::repeat(m).take(c)).collect()
}

impl ConvexFit {
    pub fn from_moment(mf: &MomentFunction) -> Result<Self> {
        let t = &mf.theta;
        let n = t.len();
        if n < 3 || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridTooCoarse("need at least three increasing theta values".into()));
        }
        let zero = t
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::GridTooCoarse("theta grid does not contain 0".into()))?;
        let dt: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let raw: Vec<f64> = (0..n - 1).map(|i| (mf.lambda_hat[i + 1] - mf.lambda_hat[i]) / dt[i]).collect();
        let s = pool_adjacent_violators(&raw, &dt);
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            d[i] = (s[i - 1] * dt[i] + s[i] * dt[i - 1]) / (dt[i - 1] + dt[i]);
        }
        d[0] = 2.0 * s[0] - d[1];
        d[n - 1] = 2.0 * s[n - 2] - d[n - 2];
        let mut value = vec![0.0; n];
        value[zero] = mf.lambda_hat[zero];
        for i in zero..n - 1 {
            value[i + 1] = value[i] + 0.5 * dt[i] * (d[i] + d[i + 1]);
        }
        for i in (0..zero).rev() {
            value[i] = value[i + 1] - 0.5 * dt[i] * (d[i] + d[i + 1]);
        }
        Ok(Self { theta: t.clone(), value, derivative: d })
    }

    fn segment(&self, theta: f64) -> usize {
        self.theta.partition_point(|&x| x <= theta).clamp(1, self.theta.len() - 1) - 1
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let i = self.segment(theta);
        let (d0, d1) = (self.derivative[i], self.derivative[i + 1]);
        let dt = self.theta[i + 1] - self.theta[i];
        let u = theta - self.theta[i];
        self.value[i] + u * d0 + u * u * (d1 - d0) / (2.0 * dt)
    }

    pub fn slope(&self, theta: f64) -> f64 {
        let i = self.segment(theta);
        let dt = self.theta[i + 1] - self.theta[i];
        self.derivative[i] + (theta - self.theta[i]) * (self.derivative[i + 1] - self.derivative[i]) / dt
    }

    /// `Λ̃'(θ_max)`, the largest identifiable deviation level.
    pub fn max_slope(&self) -> f64 {
        *self.derivative.last().unwrap()
    }

    /// `(c(ε), θ*)` with `c(ε) = sup_{θ≥0} θε − Λ̃(θ)`.
    pub fn legendre(&self, eps: f64) -> Result<(f64, f64)> {
        let max_slope = self.max_slope();
        if !(eps.is_finite() && eps <= max_slope) {
            return Err(Error::OutOfRange { eps, max_slope });
        }
        let zero = self.theta.partition_point(|&x| x < 0.0);
        let theta_star = if eps <= self.derivative[zero] {
            0.0
        } else {
            let i = (zero..self.theta.len() - 1)
                .find(|&i| self.derivative[i + 1] >= eps)
                .expect("eps is below the last nodal slope");
            let (d0, d1) = (self.derivative[i], self.derivative[i + 1]);
            let dt = self.theta[i + 1] - self.theta[i];
            if d1 > d0 {
                self.theta[i] + dt * (eps - d0) / (d1 - d0)
            } else {
                self.theta[i]
            }
        };
        Ok((theta_star * eps - self.eval(theta_star), theta_star))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    pub eps: Vec<f64>,
    pub c: Vec<f64>,
    pub legendre_argmax: Vec<f64>,
    pub fit: ConvexFit,
}

impl RateFunction {
    /// `c(ε)` at an arbitrary level inside the window.
    pub fn at(&self, eps: f64) -> Result<f64> {
        self.fit.legendre(eps).map(|(c, _)| c)
    }
}

pub fn rate_function(mf: &MomentFunction, eps_grid: &[f64]) -> Result<RateFunction> {
    let fit = ConvexFit::from_moment(mf)?;
    let mut c = Vec::with_capacity(eps_grid.len());
    let mut arg = Vec::with_capacity(eps_grid.len());
    for &e in eps_grid {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("deviation levels must be positive, got {e}")));
        }
        let (v, t) = fit.legendre(e)?;
        c.push(v);
        arg.push(t);
    }
    Ok(RateFunction { eps: eps_grid.to_vec(), c, legendre_argmax: arg, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::moment::Method;

    fn quadratic(s2: f64, theta: Vec<f64>) -> MomentFunction {
        MomentFunction {
            lambda_hat: theta.iter().map(|t| 0.5 * s2 * t * t).collect(),
            std_err: vec![0.0; theta.len()],
            theta,
            method: Method::Operator,
            dropped: Vec::new(),
        }
    }

    #[test]
    fn legendre_of_a_quadratic_is_exact() {
        let theta: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.05).collect();
        let s2 = 0.56;
        let r = rate_function(&quadratic(s2, theta), &[0.01, 0.05, 0.1, 0.2, 0.27]).unwrap();
        for (e, c) in r.eps.iter().zip(&r.c) {
            let exact = e * e / (2.0 * s2);
            assert!((c - exact).abs() < 1e-14, "eps {e}: {c} vs {exact}");
        }
        assert!(matches!(r.fit.legendre(0.3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn pav_restores_monotone_slopes() {
        let y = pool_adjacent_violators(&[1.0, 3.0, 2.0, 4.0], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(y, vec![1.0, 2.5, 2.5, 4.0]);
    }
}
