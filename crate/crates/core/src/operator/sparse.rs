use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use num_traits::Zero;

/// Compressed sparse row matrix with `u32` column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

/// Scalars the transfer matrices are built over.
pub trait Scalar: Copy + Zero + AddAssign + Mul<Output = Self> + Mul<f64, Output = Self> + Send + Sync {}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

impl<T: Scalar> CsrMatrix<T> {
    pub fn from_parts(n: usize, row_ptr: Vec<usize>, cols: Vec<u32>, vals: Vec<T>) -> Self {
        debug_assert_eq!(row_ptr.len(), n + 1);
        debug_assert_eq!(cols.len(), vals.len());
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self
    where
        T: num_traits::One,
    {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: vec![T::one(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    pub fn values(&self) -> &[T] {
        &self.vals
    }

    pub fn pattern(&self) -> (&[usize], &[u32]) {
        (&self.row_ptr, &self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    pub fn row_sum(&self, i: usize) -> T {
        let mut s = T::zero();
        for (_, v) in self.row(i) {
            s += v;
        }
        s
    }

    /// `out = Mᵀ h`: the push-forward of cell masses `h`.
    pub fn push_forward(&self, h: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for i in 0..self.n {
            let hi = h[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[self.cols[p] as usize] += self.vals[p] * hi;
            }
        }
    }

    /// `out = M v`.
    pub fn apply(&self, v: &[T], out: &mut [T]) {
        for i in 0..self.n {
            let mut s = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * v[self.cols[p] as usize];
            }
            out[i] = s;
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn map_values<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_forward_is_transpose_apply() {
        let m = CsrMatrix::from_parts(3, vec![0, 2, 3, 5], vec![0, 2, 1, 0, 1], vec![0.5, 0.5, 1.0, 0.25, 0.75]);
        let h = [1.0, 2.0, 3.0];
        let mut out = [0.0; 3];
        m.push_forward(&h, &mut out);
        assert_eq!(out, [0.5 + 0.75, 2.0 + 2.25, 0.5]);
        let mut a = [0.0; 3];
        m.apply(&h, &mut a);
        assert_eq!(a, [0.5 + 1.5, 2.0, 0.25 + 1.5]);
        assert_eq!(m.get(2, 1), 0.75);
        assert_eq!(m.get(1, 0), 0.0);
    }
}
