use std::f64::consts::PI;

use flattrace::billiards::{windtree_scene, ObstacleSpec};
use flattrace::experiments::{
    diffusion_exponent, fit_line, illumination_map, random_walk_baseline, theoretical_windtree_rate, DiameterTracker,
    DIAMETER_DIRECTIONS,
};
use flattrace::surface::{build_from_pattern, builtin, BuiltinParams};
use flattrace::{Tolerance, Vec2};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn exact_diameter(pts: &[Vec2]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            d = d.max(p.dist(*q));
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tracker_brackets_the_exact_diameter(steps in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..40)) {
        let mut pts = vec![Vec2::ZERO];
        for (x, y) in &steps {
            pts.push(*pts.last().unwrap() + Vec2::new(*x, *y));
        }
        let n = pts.len() - 1;
        let mut tr = DiameterTracker::new(vec![n as f64]);
        for (t, p) in pts.iter().enumerate() {
            tr.push(*p, t as f64);
        }
        prop_assert!(tr.is_complete());
        let d = tr.recorded()[0];
        let exact = exact_diameter(&pts);
        let lower = (PI / (2.0 * DIAMETER_DIRECTIONS as f64)).cos() * exact;
        prop_assert!(d <= exact + 1e-9 && d >= lower - 1e-9, "{} vs {}", d, exact);
    }

    #[test]
    fn fit_recovers_exact_lines(slope in -3.0..3.0f64, icpt in -5.0..5.0f64, n in 3usize..20) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, icpt + slope * i as f64)).collect();
        let (s, se) = fit_line(&pts);
        prop_assert!((s - slope).abs() < 1e-9);
        prop_assert!(se.abs() < 1e-6);
    }
}

#[test]
fn rates_are_exact_double_factorial_ratios() {
    // Independent oracle with machine integers.
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for m in 1..=20u32 {
        num *= 2 * m as u128;
        den *= 2 * m as u128 + 1;
        let want = BigRational::new(BigInt::from(num), BigInt::from(den));
        assert_eq!(theoretical_windtree_rate(m).unwrap(), want);
        if m > 1 {
            assert!(theoretical_windtree_rate(m).unwrap() < theoretical_windtree_rate(m - 1).unwrap());
        }
    }
}

#[test]
fn estimates_are_bit_identical_for_equal_seeds() {
    let s = windtree_scene(2, None, &ObstacleSpec::default()).unwrap();
    let a = diffusion_exponent(&s, 6, 2e4, 99).unwrap();
    let b = diffusion_exponent(&s, 6, 2e4, 99).unwrap();
    assert_eq!(a.windows, b.windows);
    assert_eq!(a.exponent.to_bits(), b.exponent.to_bits());
    let c = diffusion_exponent(&s, 6, 2e4, 100).unwrap();
    assert_ne!(a.windows, c.windows);
    for w in a.windows.windows(2) {
        assert!(w[1].0 > w[0].0);
    }
    assert!(a.stderr >= 0.0);
}

#[test]
fn rejects_short_horizons_and_walks() {
    let s = windtree_scene(1, None, &ObstacleSpec::default()).unwrap();
    assert!(diffusion_exponent(&s, 4, 100.0, 0).is_err());
    assert!(diffusion_exponent(&s, 0, 1e4, 0).is_err());
    assert!(random_walk_baseline(1, 10, 0).is_err());
}

#[test]
fn random_walk_is_diffusive() {
    let e = random_walk_baseline(100_000, 40, 3).unwrap();
    assert!((e.exponent - 0.5).abs() < 0.07, "{}", e.exponent);
}

#[test]
fn coverage_grows_with_nested_ray_sets() {
    let s = build_from_pattern(&builtin("slit-torus", &BuiltinParams::default()).unwrap(), &Tolerance::default())
        .unwrap();
    let src = s.locate(Vec2::new(0.3719, 0.2718)).unwrap();
    let mut prev = f64::INFINITY;
    for n in [1, 4, 16, 64, 256] {
        let g = illumination_map(&s, src, n, 30.0, 25, 17).unwrap();
        assert!(g.uncovered_fraction <= prev);
        let dark = g.illuminated.iter().filter(|l| !**l).count();
        assert_eq!(dark, g.uncovered.len());
        prev = g.uncovered_fraction;
    }
}
