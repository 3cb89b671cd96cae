use proptest::prelude::*;
use qcl_core::dynamics::{presets, Observable, SkewState, TorusPoint};

fn point() -> impl Strategy<Value = TorusPoint> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| TorusPoint::new(x, y))
}

#[test]
fn compose_zero_and_linear_powers() {
    let sys = presets::standard().unwrap();
    let x = TorusPoint::new(0.3, 0.6);
    assert_eq!(sys.compose(&sys.path(1), 0, x).unwrap(), x);
    let constant = sys.constant_path(0).unwrap();
    let y = sys.compose(&constant, 2, TorusPoint::new(0.1, 0.2)).unwrap();
    // A² = [[5,3],[3,2]]
    let expected = TorusPoint::wrapped(5.0 * 0.1 + 3.0 * 0.2, 3.0 * 0.1 + 2.0 * 0.2);
    assert!((y.x() - expected.x()).abs() < 1e-14 && (y.y() - expected.y()).abs() < 1e-14);
}

#[test]
fn compose_matches_sequential_application() {
    let sys = presets::standard().unwrap();
    let omega = sys.path(5);
    let x = TorusPoint::new(0.123, 0.456);
    let mut y = x;
    for i in 0..5 {
        y = sys.map(omega.symbol(i)).apply(y).unwrap();
    }
    assert_eq!(sys.compose(&omega, 5, x).unwrap(), y);
}

#[test]
fn birkhoff_sum_unrolled() {
    let sys = presets::standard().unwrap();
    let omega = sys.path(7);
    let x = TorusPoint::new(0.31, 0.77);
    let x1 = sys.compose(&omega, 1, x).unwrap();
    let x2 = sys.compose(&omega, 2, x).unwrap();
    let by_hand = sys.observe(omega.symbol(0), x).unwrap()
        + sys.observe(omega.symbol(1), x1).unwrap()
        + sys.observe(omega.symbol(2), x2).unwrap();
    assert_eq!(sys.birkhoff_sum(&omega, x, 3).unwrap(), by_hand);
    assert_eq!(sys.birkhoff_sum(&omega, x, 0).unwrap(), 0.0);
    let zero = sys.with_observable(Observable::zero(2)).unwrap();
    assert_eq!(zero.birkhoff_sum(&omega, x, 50).unwrap(), 0.0);
}

#[test]
fn skew_steps_reproduce_compose_and_birkhoff() {
    let sys = presets::dissipative().unwrap();
    let omega = sys.path(9);
    let x = TorusPoint::new(0.9, 0.05);
    let fixed = sys.with_observable(Observable::zero(2)).unwrap();
    let origin = SkewState { omega: fixed.constant_path(0).unwrap(), x: TorusPoint::new(0.0, 0.0) };
    let next = fixed.skew_step(&origin).unwrap();
    assert_eq!(next.x, origin.x);
    assert_eq!(next.omega.cursor(), 1);

    let mut state = SkewState { omega: omega.clone(), x };
    let mut sum = 0.0;
    for _ in 0..10 {
        sum += sys.observe(state.omega.symbol(0), state.x).unwrap();
        state = sys.skew_step(&state).unwrap();
    }
    assert_eq!(state.x, sys.compose(&omega, 10, x).unwrap());
    assert!((sum - sys.birkhoff_sum(&omega, x, 10).unwrap()).abs() < 1e-12);
}

#[test]
fn orbits_are_deterministic() {
    let sys = presets::standard().unwrap();
    let a = sys.birkhoff_sum(&sys.path(42), TorusPoint::new(0.2, 0.4), 500).unwrap();
    let b = sys.birkhoff_sum(&sys.path(42), TorusPoint::new(0.2, 0.4), 500).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn preset_maps_are_hyperbolic() {
    for sys in [presets::standard(), presets::dissipative(), presets::piecewise()] {
        for map in sys.unwrap().maps() {
            let c = map.expansion_certificate(1000, 50, 3).unwrap();
            assert!(c > 1.5, "{c}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cocycle_property(seed in any::<u64>(), x in point(), m in 0usize..=20, n in 0usize..=20) {
        let sys = presets::dissipative().unwrap();
        let omega = sys.path(seed);
        let direct = sys.compose(&omega, m + n, x).unwrap();
        let split = sys.compose(&omega.shift(n as i64), m, sys.compose(&omega, n, x).unwrap()).unwrap();
        prop_assert_eq!(direct, split);
    }

    #[test]
    fn birkhoff_additivity(seed in any::<u64>(), x in point(), m in 0usize..=100, n in 0usize..=100) {
        let sys = presets::standard().unwrap();
        let omega = sys.path(seed);
        let whole = sys.birkhoff_sum(&omega, x, m + n).unwrap();
        let head = sys.birkhoff_sum(&omega, x, n).unwrap();
        let tail = sys.birkhoff_sum(&omega.shift(n as i64), sys.compose(&omega, n, x).unwrap(), m).unwrap();
        prop_assert!((whole - head - tail).abs() < 1e-10);
    }

    #[test]
    fn coboundary_sums_telescope(seed in any::<u64>(), x in point(), n in 0usize..=200) {
        let sys = presets::coboundary().unwrap();
        let omega = sys.path(seed);
        let r = |p: TorusPoint| (std::f64::consts::TAU * p.x()).cos();
        let s = sys.birkhoff_sum(&omega, x, n).unwrap();
        let end = sys.compose(&omega, n, x).unwrap();
        prop_assert!((s - (r(x) - r(end))).abs() < 1e-9);
    }

    #[test]
    fn images_stay_in_the_unit_square(seed in any::<u64>(), x in point()) {
        let sys = presets::piecewise().unwrap();
        let omega = sys.path(seed);
        if let Ok(y) = sys.compose(&omega, 30, x) {
            prop_assert!(y.is_normalized());
        }
    }
}
