use qcl_core::dynamics::{presets, Observable, TorusPoint};
use qcl_core::montecarlo::*;
use qcl_core::operator::{equivariant_density, DensityVector, OperatorModel, UlamGrid, UlamOptions};
use qcl_core::spectral::aperiodicity_diagnostic;
use qcl_core::operator::eigen::ArnoldiOptions;
use qcl_core::Error;

fn plan(seed: u64, n_samples: usize, burn_in: usize, n: usize) -> SamplePlan {
    SamplePlan { seed, n_samples, burn_in, n, batches: 10 }
}

/// Two-sample Kolmogorov–Smirnov distance.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn volume_preserving_samples_are_uniform() {
    let sys = presets::standard().unwrap();
    let s = sample_mu_omega(&sys, &sys.path(1), &plan(3, 100_000, 0, 1)).unwrap();
    let n = s.points.len() as f64;
    // KS critical value at the 0.1% level is about 1.95/√N
    let crit = 1.95 / n.sqrt();
    for coord in 0..2 {
        let xs: Vec<f64> = s.points.iter().map(|p| p.0[coord]).collect();
        let ks = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(ks < crit, "coordinate {coord}: {ks} vs {crit}");
    }
}

#[test]
fn burn_in_does_not_change_lebesgue_samples() {
    let sys = presets::standard().unwrap();
    let omega = sys.path(2);
    let a = sample_mu_omega(&sys, &omega, &plan(5, 50_000, 0, 1)).unwrap();
    let b = sample_mu_omega(&sys, &omega, &plan(6, 50_000, 5, 1)).unwrap();
    let crit = 1.95 * (2.0 / 50_000.0f64).sqrt();
    for coord in 0..2 {
        let xa: Vec<f64> = a.points.iter().map(|p| p.0[coord]).collect();
        let xb: Vec<f64> = b.points.iter().map(|p| p.0[coord]).collect();
        assert!(ks_two_sample(&xa, &xb) < crit);
    }
}

#[test]
fn dissipative_samples_match_the_operator_density() {
    let sys = presets::dissipative().unwrap();
    let omega = sys.path(4);
    let grid = UlamGrid::new(32).unwrap();
    let model = OperatorModel::build(&sys, grid, &UlamOptions::new(256, 3)).unwrap();
    let h = equivariant_density(&model, &omega, 50);
    let s = sample_mu_omega(&sys, &omega, &plan(7, 1_000_000, 30, 1)).unwrap();
    let hist = DensityVector::histogram(grid, &s.points);
    let d = hist.l1_distance(&h);
    assert!(d < 0.1, "L1 distance {d}");
    // and the density is visibly non-uniform
    assert!(hist.l1_distance(&DensityVector::uniform(grid)) > 2.0 * d);
}

#[test]
fn samples_are_reproducible_across_thread_counts() {
    let sys = presets::piecewise().unwrap();
    let omega = sys.path(8);
    let p = plan(11, 5000, 7, 40);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| birkhoff_sums(&sys, &omega, &p, &[10, 40]).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one, three);
    assert!(one.sums[1].iter().all(|s| s.is_finite()));
}

#[test]
fn piecewise_boundary_hits_are_redrawn() {
    let sys = presets::piecewise().unwrap();
    let s = sample_mu_omega(&sys, &sys.path(1), &plan(1, 1000, 20, 1)).unwrap();
    assert_eq!(s.points.len(), 1000);
    assert!(s.points.iter().all(TorusPoint::is_normalized));
}

#[test]
fn zero_observable_sums_vanish_and_clt_is_refused() {
    let sys = presets::standard().unwrap().with_observable(Observable::zero(2)).unwrap();
    let omega = sys.path(3);
    let p = plan(2, 1000, 0, 50);
    let s = birkhoff_sums(&sys, &omega, &p, &[50]).unwrap();
    assert!(s.sums[0].iter().all(|&v| v == 0.0));
    let r = verify_clt(&sys, &omega, &p, 0.0, 1e-3, &[50]);
    assert!(matches!(r, Err(Error::DegenerateVariance { .. })));
}

#[test]
fn clt_holds_roughly_at_moderate_n() {
    let sys = presets::standard().unwrap();
    let omega = sys.path(5);
    let p = plan(9, 20_000, 0, 400);
    let r = verify_clt(&sys, &omega, &p, 0.5628, 1e-3, &[100, 400]).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r[1].ks < 0.03, "{:?}", r[1].ks);
    assert!((r[1].sample_variance - 0.5628).abs() < 0.05);
    assert_eq!(r[1].batch_ks.len(), 10);
}

#[test]
fn lattice_observable_is_refused_by_the_local_limit_check() {
    let sys = presets::lattice().unwrap();
    let omega = sys.path(1);
    let model = OperatorModel::build(&sys, UlamGrid::new(16).unwrap(), &UlamOptions::new(64, 1)).unwrap();
    let ap = aperiodicity_diagnostic(&model, &omega, &[0.5, 1.0], 30, 0, &ArnoldiOptions::default()).unwrap();
    let r = verify_lclt(&sys, &omega, &plan(1, 1000, 0, 100), (0.0, 1.0), &[0.0], 4.0, 1e-3, &ap);
    assert!(matches!(r, Err(Error::AperiodicityFailed { .. })));
}

#[test]
fn empirical_variance_of_a_coboundary_is_small() {
    let sys = presets::coboundary().unwrap();
    let e = empirical_variance(&sys, &sys.path(2), &plan(4, 20_000, 0, 200)).unwrap();
    assert!(e.value.abs() < 0.01, "{e:?}");
}
