mod common;

use num_complex::Complex64;
use qcl_core::dynamics::{presets, HyperbolicMap, IntMatrix, RandomSystem, TorusMap, TorusPoint};
use qcl_core::operator::eigen::{leading_eigenvalue, ArnoldiOptions};
use qcl_core::operator::*;
use qcl_core::Result;

struct Identity;

impl TorusMap for Identity {
    fn apply(&self, x: TorusPoint) -> Result<TorusPoint> {
        Ok(x)
    }

    fn is_volume_preserving(&self) -> bool {
        true
    }
}

fn grid(k: usize) -> UlamGrid {
    UlamGrid::new(k).unwrap()
}

fn model(sys: &RandomSystem, k: usize) -> OperatorModel {
    OperatorModel::build(sys, grid(k), &UlamOptions::new(64, 11)).unwrap()
}

#[test]
fn identity_map_gives_identity_matrix() {
    let m = build_ulam(&Identity, grid(8), &UlamOptions::new(16, 1), 0).unwrap();
    assert_eq!(m.matrix, CsrMatrix::identity(64));
}

#[test]
fn cat_map_matches_polygon_clipping() {
    let cat = HyperbolicMap::linear(IntMatrix::CAT).unwrap();
    let m = build_ulam(&cat, grid(2), &UlamOptions::new(40_000, 5), 0).unwrap();
    let exact = common::exact_linear_ulam(IntMatrix::CAT.as_f64(), 2);
    for (i, row) in exact.iter().enumerate() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (j, &e) in row.iter().enumerate() {
            let got = m.matrix.get(i, j);
            assert!((got - e).abs() < 2e-3, "({i},{j}): {got} vs {e}");
        }
    }
}

#[test]
fn rows_sum_to_one_for_every_family() {
    for sys in [presets::standard(), presets::dissipative(), presets::piecewise()] {
        let sys = sys.unwrap();
        let model = model(&sys, 16);
        for a in 0..2 {
            let m = model.matrix(a);
            assert!(m.matrix.values().iter().all(|&v| v >= 0.0));
            for s in m.row_sums() {
                assert!((s - 1.0).abs() < 1e-12, "{s}");
            }
        }
    }
}

#[test]
fn balanced_matrices_fix_the_uniform_density() {
    let model = model(&presets::standard().unwrap(), 32);
    for a in 0..2 {
        assert!(model.samples(a).is_balanced());
        for s in model.matrix(a).col_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
    let d = model_dissipative(32);
    assert!(!d.samples(1).is_balanced());
}

fn model_dissipative(k: usize) -> OperatorModel {
    model(&presets::dissipative().unwrap(), k)
}

#[test]
fn zero_twist_is_bit_identical() {
    for m in [model(&presets::standard().unwrap(), 16), model_dissipative(16)] {
        let tw = m.twisted(Complex64::new(0.0, 0.0));
        assert!(tw.is_untwisted);
        for a in 0..2 {
            let plain = &m.matrix(a).matrix;
            let twisted = &tw.matrix(a).matrix;
            assert_eq!(plain.pattern(), twisted.pattern());
            for (p, t) in plain.values().iter().zip(twisted.values()) {
                assert_eq!(p.to_bits(), t.re.to_bits());
                assert_eq!(t.im, 0.0);
            }
        }
    }
}

#[test]
fn imaginary_twist_is_dominated() {
    let m = model_dissipative(16);
    for t in [0.3, 1.0, 2.5] {
        let tw = m.twisted(Complex64::new(0.0, t));
        for a in 0..2 {
            for (p, z) in m.matrix(a).matrix.values().iter().zip(tw.matrix(a).matrix.values()) {
                assert!(z.norm() <= p * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn twisted_row_sums_match_reaccumulation() {
    let cat = HyperbolicMap::linear(IntMatrix::CAT).unwrap();
    let opts = UlamOptions { balance: BalanceMode::Never, ..UlamOptions::new(32, 3) };
    let samples = TransitionSamples::sample(&cat, grid(16), &opts, 0).unwrap();
    let g: Vec<f64> = samples.sources().iter().map(|x| (std::f64::consts::TAU * x.x()).cos()).collect();
    let tw = samples.twisted(Complex64::new(0.1, 0.0), &g);
    for cell in 0..256 {
        let oracle: f64 = samples.row_samples(cell).map(|s| (0.1 * g[s]).exp()).sum::<f64>() / 32.0;
        let got = tw.matrix.row_sum(cell);
        assert!((got.re - oracle).abs() < 1e-13 && got.im == 0.0, "{got} vs {oracle}");
    }
}

#[test]
fn volume_preserving_density_is_uniform() {
    let sys = presets::standard().unwrap();
    let m = model(&sys, 64);
    let omega = sys.path(3);
    let u = DensityVector::uniform(grid(64));
    assert_eq!(equivariant_density(&m, &omega, 0), u);
    let h = equivariant_density(&m, &omega, 50);
    assert!(h.l1_distance(&u) < 1e-10);
    let profile = pullback_decay_profile(&m, &omega, 20);
    assert!(profile.gaps.iter().all(|&(_, g)| g < 1e-10));
}

#[test]
fn dissipative_pullbacks_converge_geometrically() {
    let sys = presets::dissipative().unwrap();
    let m = model(&sys, 64);
    let omega = sys.path(3);
    let profile = pullback_decay_profile(&m, &omega, 60);
    let fit = profile.fit.unwrap();
    assert!(fit.slope < -0.05, "{fit:?}");
    assert!(fit.r_squared > 0.95, "{fit:?}");
    let (d, lambda) = profile.envelope(5).unwrap();
    assert!(lambda > 0.0);
    let gap = pullback(&m, &omega, 30).l1_distance(&pullback(&m, &omega, 60));
    assert!(gap < d * (-lambda * 30.0).exp(), "{gap} vs {}", d * (-lambda * 30.0).exp());
}

#[test]
fn equivariant_densities_are_equivariant_probability_densities() {
    let sys = presets::dissipative().unwrap();
    let m = model(&sys, 64);
    for seed in [1, 2, 3] {
        let omega = sys.path(seed);
        let h = equivariant_density(&m, &omega, 50);
        assert!(h.weights.iter().all(|&w| w >= 0.0));
        assert!((h.mass() - 1.0).abs() < 1e-12);
        let mut pushed = vec![0.0; h.weights.len()];
        m.matrix(omega.symbol(0)).matrix.push_forward(&h.weights, &mut pushed);
        let next = equivariant_density(&m, &omega.shift(1), 50);
        let pushed = DensityVector { grid: h.grid, weights: pushed };
        assert!(pushed.l1_distance(&next) < 5e-3);
    }
}

#[test]
fn equivariance_holds_after_a_volume_preserving_step() {
    // symbol 0 (the cat map) fixes the uniform density exactly
    let sys = presets::dissipative().unwrap();
    let m = model(&sys, 32);
    let omega = sys.path(5);
    let i = (1..200).find(|&i| omega.symbol(i - 1) == 0 && omega.symbol(i) == 0).unwrap();
    let h = equivariant_density(&m, &omega.shift(i), 50);
    let mut pushed = vec![0.0; h.weights.len()];
    m.matrix(0).matrix.push_forward(&h.weights, &mut pushed);
    let next = DensityVector { grid: h.grid, weights: pushed };
    assert!(next.l1_distance(&equivariant_density(&m, &omega.shift(i + 1), 50)) < 5e-3);
    assert!(h.l1_distance(&DensityVector::uniform(h.grid)) > 1e-3);
}

#[test]
fn refinement_differences_shrink() {
    let sys = presets::dissipative().unwrap();
    let omega = sys.path(8);
    let density = |k: usize| equivariant_density(&model(&sys, k), &omega, 50);
    let hs: Vec<DensityVector> = [16, 32, 64, 128].iter().map(|&k| density(k)).collect();
    let diffs: Vec<f64> = hs.windows(2).map(|w| w[1].aggregate(w[0].grid).unwrap().l1_distance(&w[0])).collect();
    for w in diffs.windows(2) {
        assert!(w[1] <= 1.2 * w[0], "{diffs:?}");
    }
}

#[test]
fn lyapunov_spectrum_shows_a_gap() {
    let sys = presets::standard().unwrap();
    let m = model(&sys, 64);
    let r = lyapunov_spectrum(&m, &sys.path(4), 500, 2, 10).unwrap();
    assert!(r.exponents[0].abs() < 0.01, "{:?}", r.exponents);
    assert!(r.exponents[1] < -0.05, "{:?}", r.exponents);
    assert!(r.exponents.windows(2).all(|w| w[0] >= w[1]));
    assert!(r.residuals.iter().all(|&d| d < 1e-10));
}

#[test]
fn lyapunov_spectrum_is_stable_under_reorthonormalisation() {
    let sys = presets::dissipative().unwrap();
    let m = model(&sys, 32);
    let omega = sys.path(6);
    let runs: Vec<Vec<f64>> = [5, 10, 20]
        .iter()
        .map(|&p| lyapunov_spectrum(&m, &omega, 400, 2, p).unwrap().exponents)
        .collect();
    for r in &runs[1..] {
        for (a, b) in r.iter().zip(&runs[0]) {
            assert!((a - b).abs() < 0.02, "{runs:?}");
        }
    }
}

#[test]
fn constant_path_exponents_match_dense_eigenvalues() {
    let sys = presets::standard().unwrap();
    let m = model(&sys, 32);
    let omega = sys.constant_path(1).unwrap();
    let r = lyapunov_spectrum(&m, &omega, 2000, 3, 5).unwrap();
    let eig = common::dense_eigenvalues_real(&m.matrix(1).matrix);
    for (l, e) in r.exponents.iter().zip(&eig) {
        assert!((l - e.norm().ln()).abs() < 0.02, "{:?} vs {:?}", r.exponents, &eig[..3]);
    }
}

#[test]
fn arnoldi_matches_dense_solver() {
    let m = model_dissipative(16);
    for t in [0.5, 1.5] {
        let tw = m.twisted(Complex64::new(0.0, t));
        let mat = &tw.matrix(1).matrix;
        let dense = common::dense_eigenvalues(mat)[0].norm();
        let e = leading_eigenvalue(256, |x, y| mat.push_forward(x, y), &ArnoldiOptions::default()).unwrap();
        assert!((e.value.norm() - dense).abs() < 1e-8, "{} vs {dense}", e.value.norm());
    }
}

#[test]
fn lasota_yorke_fit_for_the_cat_map() {
    let sys = presets::standard().unwrap();
    let m = model(&sys, 128);
    let omega = sys.constant_path(0).unwrap();
    let tests = test_densities(grid(128));
    let fit = lasota_yorke_probe(&m, &omega, &[0, 1, 2, 4, 8, 16], grid(16), &tests).unwrap();
    assert!(fit.a < 1.0 && fit.b >= 1.0, "{fit:?}");
    assert!(fit.residuals.iter().all(|&r| r >= -1e-12));
    let uniform = [DensityVector::uniform(grid(128))];
    assert_eq!(uniform[0].total_variation(), 0.0);
}

#[test]
fn centering_is_exact_for_lebesgue_fibers() {
    let sys = presets::standard().unwrap();
    let m = model(&sys, 32);
    let c = m.centering(sys.observable(), &sys.path(2), &[0, 17, 101], 30).unwrap();
    assert!(c.offsets.iter().all(|o| o.abs() < 1e-12), "{:?}", c.offsets);
    assert!(c.max_fiber_mean < 1e-12);

    let sys = presets::dissipative().unwrap();
    let m = model(&sys, 32);
    let c = m.centering(sys.observable(), &sys.path(2), &(0..20).map(|i| 13 * i).collect::<Vec<_>>(), 30).unwrap();
    assert!(c.max_fiber_mean.is_finite() && c.max_fiber_mean < 0.05, "{c:?}");
    // the stationary density is the average of the fiber densities
    let omega = sys.path(4);
    let n = 400;
    let mut avg = vec![0.0; m.grid().cells()];
    for i in 0..n {
        let h = equivariant_density(&m, &omega.shift(7 * i), 30);
        avg.iter_mut().zip(&h.weights).for_each(|(a, w)| *a += w / n as f64);
    }
    let avg = DensityVector { grid: m.grid(), weights: avg };
    let stationary = m.stationary_density(sys.distribution().probs(), 30);
    assert!(avg.l1_distance(&stationary) < 0.01, "{}", avg.l1_distance(&stationary));
}

#[test]
fn coordinate_export_lists_every_entry() {
    let m = model_dissipative(4);
    let mut out = Vec::new();
    m.matrix(1).write_coo(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,col,re,im"));
    assert_eq!(lines.count(), m.matrix(1).matrix.nnz());
}
