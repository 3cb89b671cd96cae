//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

extern crate openblas_src;

use num_complex::Complex64;
use qcl_core::operator::CsrMatrix;

/// All eigenvalues of a dense complex matrix (LAPACK `zgeev`).
pub fn dense_eigenvalues(m: &CsrMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.dim();
    // column-major
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for (j, v) in m.row(i) {
            a[i + j * n] = v;
        }
    }
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut vl = vec![Complex64::new(0.0, 0.0); 1];
    let mut vr = vec![Complex64::new(0.0, 0.0); 1];
    let mut work = vec![Complex64::new(0.0, 0.0); 4 * n];
    let mut rwork = vec![0.0; 2 * n];
    let mut info = 0;
    unsafe {
        lapack::zgeev(
            b'N', b'N', n as i32, &mut a, n as i32, &mut w, &mut vl, 1, &mut vr, 1, &mut work, 4 * n as i32, &mut rwork,
            &mut info,
        );
    }
    assert_eq!(info, 0, "zgeev failed");
    w.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    w
}

pub fn dense_eigenvalues_real(m: &CsrMatrix<f64>) -> Vec<Complex64> {
    dense_eigenvalues(&m.map_values(|v| Complex64::new(v, 0.0)))
}

/// Area of a convex polygon clipped to an axis-aligned box
/// (Sutherland–Hodgman).
pub fn clipped_area(poly: &[(f64, f64)], x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let mut pts = poly.to_vec();
    let edges: [(usize, f64, bool); 4] = [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)];
    for (axis, bound, keep_above) in edges {
        let inside = |p: &(f64, f64)| {
            let c = if axis == 0 { p.0 } else { p.1 };
            if keep_above { c >= bound } else { c <= bound }
        };
        let cross = |a: (f64, f64), b: (f64, f64)| {
            let (ca, cb) = if axis == 0 { (a.0, b.0) } else { (a.1, b.1) };
            let t = (bound - ca) / (cb - ca);
            (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
        };
        let mut out = Vec::new();
        for i in 0..pts.len() {
            let (cur, prev) = (pts[i], pts[(i + pts.len() - 1) % pts.len()]);
            match (inside(&prev), inside(&cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(cross(prev, cur)),
                (false, true) => {
                    out.push(cross(prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
        pts = out;
        if pts.is_empty() {
            return 0.0;
        }
    }
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| pts[i].0 * pts[(i + 1) % n].1 - pts[(i + 1) % n].0 * pts[i].1)
        .sum::<f64>()
        .abs()
}

/// Exact Ulam matrix of the linear automorphism `a` on a `k × k` grid.
pub fn exact_linear_ulam(a: [[f64; 2]; 2], k: usize) -> Vec<Vec<f64>> {
    let n = k * k;
    let s = 1.0 / k as f64;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        let (x0, y0) = ((i % k) as f64 * s, (i / k) as f64 * s);
        let poly: Vec<(f64, f64)> = [(x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s)]
            .iter()
            .map(|&(x, y)| (a[0][0] * x + a[0][1] * y, a[1][0] * x + a[1][1] * y))
            .collect();
        for (j, row) in m[i].iter_mut().enumerate() {
            let (u0, v0) = ((j % k) as f64 * s, (j / k) as f64 * s);
            let mut area = 0.0;
            for p in -4..=4 {
                for q in -4..=4 {
                    let (bx, by) = (u0 + p as f64, v0 + q as f64);
                    area += clipped_area(&poly, bx, bx + s, by, by + s);
                }
            }
            *row = area / (s * s);
        }
    }
    m
}
