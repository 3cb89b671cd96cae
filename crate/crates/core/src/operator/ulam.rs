use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::grid::UlamGrid;
use super::sparse::{CsrMatrix, Scalar};
use crate::dynamics::{TorusMap, TorusPoint};
use crate::error::{Error, Result};
use crate::seed;

/// When to rescale a sampled matrix to be doubly stochastic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BalanceMode {
    /// Balance exactly when the map preserves Lebesgue measure, in which case
    /// the exact Ulam matrix is doubly stochastic.
    #[default]
    Auto,
    Never,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlamOptions {
    pub samples_per_cell: usize,
    pub seed: u64,
    pub balance: BalanceMode,
}

impl UlamOptions {
    pub fn new(samples_per_cell: usize, seed: u64) -> Self {
        Self { samples_per_cell, seed, balance: BalanceMode::Auto }
    }
}

/// Ulam matrix of one fiber map: entry `(i, j)` estimates
/// `Leb(cell_i ∩ T⁻¹ cell_j) / Leb(cell_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamMatrix {
    pub grid: UlamGrid,
    pub symbol: usize,
    pub matrix: CsrMatrix<f64>,
}

/// Ulam matrix of `h ↦ L(e^{θg} h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedUlamMatrix {
    pub grid: UlamGrid,
    pub symbol: usize,
    pub theta: Complex64,
    pub matrix: CsrMatrix<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Balance {
    rows: Vec<f64>,
    cols: Vec<f64>,
}

/// The stratified sample stream behind one Ulam matrix. Every twisted matrix
/// of the same symbol is built from the same transitions, so the sparsity
/// pattern is shared and `θ = 0` reproduces the untwisted matrix bit for bit.
#[derive(Debug, Clone)]
pub struct TransitionSamples {
    grid: UlamGrid,
    symbol: usize,
    samples_per_cell: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    entry_of_sample: Vec<u32>,
    sources: Vec<TorusPoint>,
    images: Vec<TorusPoint>,
    balance: Option<Balance>,
    resampled: usize,
}

const MAX_RESAMPLE: usize = 1000;

fn sample_cell<M: TorusMap + ?Sized>(
    map: &M,
    grid: UlamGrid,
    cell: usize,
    spc: usize,
    stream: u64,
) -> Result<(Vec<(TorusPoint, TorusPoint)>, usize)> {
    let mut rng = seed::substream(stream, cell as u64);
    let (x0, y0) = grid.origin(cell);
    let side = grid.side();
    let sub = (spc as f64).sqrt().floor() as usize;
    let mut out = Vec::with_capacity(spc);
    let mut resampled = 0;
    for s in 0..spc {
        let (mut u, mut v): (f64, f64) = if s < sub * sub {
            let (a, b) = (s % sub, s / sub);
            ((a as f64 + rng.gen::<f64>()) / sub as f64, (b as f64 + rng.gen::<f64>()) / sub as f64)
        } else {
            (rng.gen(), rng.gen())
        };
        let mut tries = 0;
        loop {
            let x = TorusPoint::wrapped(x0 + u * side, y0 + v * side);
            match map.apply(x) {
                Ok(y) => {
                    out.push((x, y));
                    break;
                }
                Err(Error::BoundaryPoint { .. }) if tries < MAX_RESAMPLE => {
                    tries += 1;
                    resampled += 1;
                    u = rng.gen();
                    v = rng.gen();
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok((out, resampled))
}

impl TransitionSamples {
    /// Draw `samples_per_cell` stratified points in every cell and record
    /// where the map sends them. The stream for cell `i` is keyed by
    /// `(seed, symbol, i)`, so the result does not depend on thread count.
    pub fn sample<M: TorusMap + ?Sized>(map: &M, grid: UlamGrid, opts: &UlamOptions, symbol: usize) -> Result<Self> {
        let spc = opts.samples_per_cell;
        if spc == 0 {
            return Err(Error::InvalidArgument("samples_per_cell must be >= 1".into()));
        }
        let stream = seed::mix_index(opts.seed, symbol as u64);
        let rows: Vec<(Vec<(TorusPoint, TorusPoint)>, usize)> = (0..grid.cells())
            .into_par_iter()
            .map(|cell| sample_cell(map, grid, cell, spc, stream))
            .collect::<Result<_>>()?;

        let n = grid.cells();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut entry_of_sample = Vec::with_capacity(n * spc);
        let mut sources = Vec::with_capacity(n * spc);
        let mut images = Vec::with_capacity(n * spc);
        let mut resampled = 0;
        for (samples, r) in rows {
            resampled += r;
            let mut targets: Vec<u32> = samples.iter().map(|(_, y)| grid.cell_of(*y) as u32).collect();
            let per_sample = targets.clone();
            targets.sort_unstable();
            targets.dedup();
            let base = cols.len();
            for t in per_sample {
                let pos = targets.binary_search(&t).expect("target recorded");
                entry_of_sample.push((base + pos) as u32);
            }
            cols.extend_from_slice(&targets);
            row_ptr.push(cols.len());
            for (x, y) in samples {
                sources.push(x);
                images.push(y);
            }
        }
        let mut out = Self {
            grid,
            symbol,
            samples_per_cell: spc,
            row_ptr,
            cols,
            entry_of_sample,
            sources,
            images,
            balance: None,
            resampled,
        };
        let balance = match opts.balance {
            BalanceMode::Never => false,
            BalanceMode::Always => true,
            BalanceMode::Auto => map.is_volume_preserving(),
        };
        if balance {
            let raw = out.raw_values(|_| 1.0);
            out.balance = Some(balance_scaling(n, &out.row_ptr, &out.cols, &raw)?);
        }
        Ok(out)
    }

    pub fn grid(&self) -> UlamGrid {
        self.grid
    }

    pub fn symbol(&self) -> usize {
        self.symbol
    }

    pub fn samples_per_cell(&self) -> usize {
        self.samples_per_cell
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn sources(&self) -> &[TorusPoint] {
        &self.sources
    }

    pub fn images(&self) -> &[TorusPoint] {
        &self.images
    }

    /// Number of boundary hits that were redrawn.
    pub fn resampled(&self) -> usize {
        self.resampled
    }

    pub fn is_balanced(&self) -> bool {
        self.balance.is_some()
    }

    /// Samples of row `cell`, as indices into [`Self::sources`].
    pub fn row_samples(&self, cell: usize) -> std::ops::Range<usize> {
        cell * self.samples_per_cell..(cell + 1) * self.samples_per_cell
    }

    /// Per-entry averages of `weight(sample)` over the samples of each row.
    fn raw_values<T: Scalar>(&self, weight: impl Fn(usize) -> T) -> Vec<T> {
        let mut vals = vec![T::zero(); self.cols.len()];
        for (s, &e) in self.entry_of_sample.iter().enumerate() {
            vals[e as usize] += weight(s);
        }
        let inv = 1.0 / self.samples_per_cell as f64;
        vals.iter_mut().for_each(|v| *v = *v * inv);
        vals
    }

    fn finish<T: Scalar>(&self, mut vals: Vec<T>) -> CsrMatrix<T> {
        if let Some(b) = &self.balance {
            for i in 0..self.grid.cells() {
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    vals[p] = vals[p] * b.rows[i] * b.cols[self.cols[p] as usize];
                }
            }
        }
        CsrMatrix::from_parts(self.grid.cells(), self.row_ptr.clone(), self.cols.clone(), vals)
    }

    pub fn untwisted(&self) -> UlamMatrix {
        UlamMatrix {
            grid: self.grid,
            symbol: self.symbol,
            matrix: self.finish(self.raw_values(|_| 1.0)),
        }
    }

    /// Twisted matrix with weight `e^{θ g}` taken at each sample's source
    /// point; `g_values[s]` is the observable at sample `s`.
    pub fn twisted(&self, theta: Complex64, g_values: &[f64]) -> TwistedUlamMatrix {
        assert_eq!(g_values.len(), self.len(), "one observable value per sample");
        TwistedUlamMatrix {
            grid: self.grid,
            symbol: self.symbol,
            theta,
            matrix: self.finish(self.raw_values(|s| (theta * g_values[s]).exp())),
        }
    }
}

/// `y = S x` for the symmetric block matrix `S = [[0, A], [Aᵀ, 0]]`.
fn bipartite_apply(n: usize, row_ptr: &[usize], cols: &[u32], vals: &[f64], x: &[f64], y: &mut [f64]) {
    let (r, c) = x.split_at(n);
    let (yr, yc) = y.split_at_mut(n);
    yc.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        let mut s = 0.0;
        for p in row_ptr[i]..row_ptr[i + 1] {
            let j = cols[p] as usize;
            s += vals[p] * c[j];
            yc[j] += vals[p] * r[i];
        }
        yr[i] = s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Newton–CG scaling of Knight and Ruiz applied to `[[0, A], [Aᵀ, 0]]`:
/// finds `x = (r, c) > 0` with `diag(x) S diag(x)` doubly stochastic, so that
/// `r_i A_ij c_j` has unit row and column sums. Plain Sinkhorn iteration
/// needs tens of thousands of sweeps on fine Ulam grids.
fn knight_ruiz(n: usize, row_ptr: &[usize], cols: &[u32], vals: &[f64], tol: f64) -> Option<Vec<f64>> {
    const DELTA_LO: f64 = 0.1;
    const DELTA_HI: f64 = 3.0;
    const G: f64 = 0.9;
    const ETA_MAX: f64 = 0.1;
    const MAX_PRODUCTS: usize = 100_000;
    let m = 2 * n;
    let mv = |x: &[f64], y: &mut [f64]| bipartite_apply(n, row_ptr, cols, vals, x, y);
    let mut x = vec![1.0; m];
    let mut sx = vec![0.0; m];
    mv(&x, &mut sx);
    let mut v: Vec<f64> = x.iter().zip(&sx).map(|(a, b)| a * b).collect();
    let mut rk: Vec<f64> = v.iter().map(|vi| 1.0 - vi).collect();
    let mut rho_km1 = dot(&rk, &rk);
    let mut rout = rho_km1;
    let mut rold = rout;
    let rt = tol * tol;
    let stop_tol = 0.5 * tol;
    let mut eta = ETA_MAX;
    let mut products = 0;
    let (mut y, mut z, mut p, mut w, mut tmp, mut ap) =
        (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    while rout > rt {
        if products > MAX_PRODUCTS {
            return None;
        }
        y.iter_mut().for_each(|e| *e = 1.0);
        let inner_tol = (eta * eta * rout).max(rt);
        let mut rho_km2 = 0.0;
        let mut k = 0;
        while rho_km1 > inner_tol {
            k += 1;
            if k == 1 {
                for i in 0..m {
                    z[i] = rk[i] / v[i];
                    p[i] = z[i];
                }
                rho_km1 = dot(&rk, &z);
            } else {
                let beta = rho_km1 / rho_km2;
                for i in 0..m {
                    p[i] = z[i] + beta * p[i];
                }
            }
            for i in 0..m {
                tmp[i] = x[i] * p[i];
            }
            mv(&tmp, &mut w);
            for i in 0..m {
                w[i] = x[i] * w[i] + v[i] * p[i];
            }
            let alpha = rho_km1 / dot(&p, &w);
            for i in 0..m {
                ap[i] = alpha * p[i];
            }
            let ynew_min = (0..m).map(|i| y[i] + ap[i]).fold(f64::INFINITY, f64::min);
            let ynew_max = (0..m).map(|i| y[i] + ap[i]).fold(f64::NEG_INFINITY, f64::max);
            if ynew_min <= DELTA_LO {
                let gamma = (0..m)
                    .filter(|&i| ap[i] < 0.0)
                    .map(|i| (DELTA_LO - y[i]) / ap[i])
                    .fold(f64::INFINITY, f64::min);
                y.iter_mut().zip(&ap).for_each(|(a, b)| *a += gamma * b);
                break;
            }
            if ynew_max >= DELTA_HI {
                let gamma = (0..m)
                    .filter(|&i| y[i] + ap[i] > DELTA_HI)
                    .map(|i| (DELTA_HI - y[i]) / ap[i])
                    .fold(f64::INFINITY, f64::min);
                y.iter_mut().zip(&ap).for_each(|(a, b)| *a += gamma * b);
                break;
            }
            y.iter_mut().zip(&ap).for_each(|(a, b)| *a += b);
            for i in 0..m {
                rk[i] -= alpha * w[i];
            }
            rho_km2 = rho_km1;
            for i in 0..m {
                z[i] = rk[i] / v[i];
            }
            rho_km1 = dot(&rk, &z);
        }
        x.iter_mut().zip(&y).for_each(|(a, b)| *a *= b);
        mv(&x, &mut sx);
        for i in 0..m {
            v[i] = x[i] * sx[i];
            rk[i] = 1.0 - v[i];
        }
        rho_km1 = dot(&rk, &rk);
        rout = rho_km1;
        products += k + 1;
        let rat = rout / rold;
        rold = rout;
        let res_norm = rout.sqrt();
        let eta_o = eta;
        eta = G * rat;
        if G * eta_o * eta_o > 0.1 {
            eta = eta.max(G * eta_o * eta_o);
        }
        eta = eta.min(ETA_MAX).max(stop_tol / res_norm);
    }
    Some(x)
}

/// Scale rows and columns to a doubly stochastic matrix: Newton–CG to near
/// convergence, then alternating column/row sweeps finishing on a row step
/// so row sums are exact to rounding.
fn balance_scaling(n: usize, row_ptr: &[usize], cols: &[u32], vals: &[f64]) -> Result<Balance> {
    const TOL: f64 = 1e-13;
    const MAX_SWEEPS: usize = 50_000;
    let mut r = match knight_ruiz(n, row_ptr, cols, vals, 1e-12) {
        Some(x) => x[..n].to_vec(),
        None => vec![1.0; n],
    };
    let mut c = vec![1.0; n];
    let mut colsum = vec![0.0; n];
    let mut defect = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        colsum.iter_mut().for_each(|s| *s = 0.0);
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                colsum[cols[p] as usize] += r[i] * vals[p];
            }
        }
        for j in 0..n {
            if colsum[j] <= 0.0 {
                return Err(Error::Balancing { iterations: sweep, defect: f64::INFINITY });
            }
            c[j] = 1.0 / colsum[j];
        }
        for i in 0..n {
            let s: f64 = (row_ptr[i]..row_ptr[i + 1]).map(|p| vals[p] * c[cols[p] as usize]).sum();
            r[i] = 1.0 / s;
        }
        colsum.iter_mut().for_each(|s| *s = 0.0);
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                colsum[cols[p] as usize] += r[i] * vals[p] * c[cols[p] as usize];
            }
        }
        defect = colsum.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        if defect < TOL {
            return Ok(Balance { rows: r, cols: c });
        }
    }
    Err(Error::Balancing { iterations: MAX_SWEEPS, defect })
}

/// Untwisted Ulam matrix of `map` on `grid`.
pub fn build_ulam<M: TorusMap + ?Sized>(map: &M, grid: UlamGrid, opts: &UlamOptions, symbol: usize) -> Result<UlamMatrix> {
    Ok(TransitionSamples::sample(map, grid, opts, symbol)?.untwisted())
}

impl UlamMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.grid.cells()).map(|i| self.matrix.row_sum(i)).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.cells()];
        self.matrix.push_forward(&vec![1.0; self.grid.cells()], &mut out);
        out
    }

    /// Coordinate format, one `row,col,re,im` line per nonzero.
    pub fn write_coo<W: Write>(&self, w: W) -> io::Result<()> {
        write_coo(w, &self.matrix, |v| (v, 0.0))
    }
}

impl TwistedUlamMatrix {
    pub fn write_coo<W: Write>(&self, w: W) -> io::Result<()> {
        write_coo(w, &self.matrix, |v| (v.re, v.im))
    }
}

fn write_coo<W: Write, T: Scalar>(mut w: W, m: &CsrMatrix<T>, parts: impl Fn(T) -> (f64, f64)) -> io::Result<()> {
    writeln!(w, "row,col,re,im")?;
    for i in 0..m.dim() {
        for (j, v) in m.row(i) {
            let (re, im) = parts(v);
            writeln!(w, "{i},{j},{re:.16e},{im:.16e}")?;
        }
    }
    Ok(())
}
