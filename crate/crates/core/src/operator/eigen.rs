//! Leading eigenvalue of a large operator given only by its action.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Power steps applied to the start vector before the first Krylov cycle.
    pub warmup: usize,
    /// Relative residual `‖Au − λu‖ / |λ|` accepted as converged.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { krylov_dim: 40, max_restarts: 60, warmup: 20, tol: 1e-9, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingEigen {
    pub value: Complex64,
    pub residual: f64,
    pub restarts: usize,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unit eigenvector of the small matrix `h` for the eigenvalue `mu`, by
/// inverse iteration on a slightly shifted system.
fn small_eigenvector(h: &DMatrix<Complex64>, mu: Complex64) -> Vec<Complex64> {
    let m = h.nrows();
    let shift = mu + Complex64::new(1e-10 * mu.norm().max(1e-300), 0.0);
    let lu = (h - DMatrix::<Complex64>::identity(m, m) * shift).lu();
    let mut y = nalgebra::DVector::from_element(m, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        if let Some(z) = lu.solve(&y) {
            let n = z.norm();
            if n.is_finite() && n > 0.0 {
                y = z / Complex64::new(n, 0.0);
            }
        }
    }
    y.iter().copied().collect()
}

/// Largest-modulus eigenvalue of the `n × n` operator `apply` by explicitly
/// restarted Arnoldi.
pub fn leading_eigenvalue(
    n: usize,
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    opts: &ArnoldiOptions,
) -> Result<LeadingEigen> {
    if n == 0 {
        return Err(Error::Eigen("empty operator".into()));
    }
    let m = opts.krylov_dim.clamp(1, n);
    let mut rng = seed::substream(opts.seed, n as u64);
    let mut u: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let normalize = |v: &mut Vec<Complex64>| -> Result<()> {
        let s = norm(v);
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Eigen("iterate vanished".into()));
        }
        v.iter_mut().for_each(|z| *z /= s);
        Ok(())
    };
    normalize(&mut u)?;
    for _ in 0..opts.warmup {
        apply(&u, &mut w);
        std::mem::swap(&mut u, &mut w);
        normalize(&mut u)?;
    }

    let mut best = LeadingEigen { value: Complex64::new(0.0, 0.0), residual: f64::INFINITY, restarts: 0 };
    for restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![u.clone()];
        let mut h = DMatrix::<Complex64>::zeros(m + 1, m);
        let mut dim = m;
        for j in 0..m {
            apply(&basis[j], &mut w);
            let mut v = w.clone();
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = inner(q, &v);
                    h[(i, j)] += c;
                    v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let beta = norm(&v);
            h[(j + 1, j)] = Complex64::new(beta, 0.0);
            if beta <= 1e-14 * h.column(j).norm().max(1e-300) {
                dim = j + 1;
                break;
            }
            if j + 1 < m {
                v.iter_mut().for_each(|z| *z /= beta);
                basis.push(v);
            }
        }
        let hs = h.view((0, 0), (dim, dim)).into_owned();
        let eig = hs
            .clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Eigen("Schur form of Hessenberg matrix failed".into()))?;
        let mu = eig.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let y = small_eigenvector(&hs, mu);
        let mut ritz = vec![Complex64::new(0.0, 0.0); n];
        for (q, c) in basis.iter().take(dim).zip(&y) {
            ritz.iter_mut().zip(q).for_each(|(r, x)| *r += c * x);
        }
        normalize(&mut ritz)?;
        apply(&ritz, &mut w);
        let res = w.iter().zip(&ritz).map(|(a, b)| (a - mu * b).norm_sqr()).sum::<f64>().sqrt();
        let rel = res / mu.norm().max(1e-300);
        if rel < best.residual {
            best = LeadingEigen { value: mu, residual: rel, restarts: restart };
        }
        if rel < opts.tol || dim < m {
            best = LeadingEigen { value: mu, residual: rel, restarts: restart };
            return Ok(best);
        }
        u = ritz;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (0..200).map(|i| 0.9 * (1.0 - i as f64 / 200.0)).collect();
        let e = leading_eigenvalue(
            d.len(),
            |x, y| y.iter_mut().zip(x).zip(&d).for_each(|((o, v), s)| *o = v * s),
            &ArnoldiOptions::default(),
        )
        .unwrap();
        assert!((e.value - Complex64::new(0.9, 0.0)).norm() < 1e-8, "{:?}", e);
    }

    #[test]
    fn rotation_block_is_found() {
        // eigenvalues 0.8 e^{±iπ/3} dominate a diagonal tail of modulus ≤ 0.5
        let n = 50;
        let (c, s) = (0.8 * (std::f64::consts::PI / 3.0).cos(), 0.8 * (std::f64::consts::PI / 3.0).sin());
        let e = leading_eigenvalue(
            n,
            |x, y| {
                y[0] = x[0] * c - x[1] * s;
                y[1] = x[0] * s + x[1] * c;
                for i in 2..n {
                    y[i] = x[i] * (0.5 * (i as f64 / n as f64));
                }
            },
            &ArnoldiOptions::default(),
        )
        .unwrap();
        assert!((e.value.norm() - 0.8).abs() < 1e-8, "{:?}", e);
    }
}
