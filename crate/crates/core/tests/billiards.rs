use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use flattrace::billiards::{
    billiard_trace, billiard_trace_with, fold_check_with, unfold_rational, windtree_scene, windtree_trace,
    BilliardOptions, BilliardTable, ObstacleSpec, WindtreeScene,
};
use flattrace::flow::{Limit, Termination};
use flattrace::Vec2;
use proptest::prelude::*;

fn tables() -> Vec<BilliardTable> {
    vec![
        BilliardTable::unit_square(),
        BilliardTable::triangle(FRAC_PI_2, FRAC_PI_4).unwrap(),
        BilliardTable::triangle(PI / 3.0, PI / 3.0).unwrap(),
        // Irrational angles are fine for direct tracing.
        BilliardTable::triangle(1.0, 0.7).unwrap(),
    ]
}

/// Point inside `t` from the weights of its first three vertices.
fn inside(t: &BilliardTable, u: f64, v: f64) -> Vec2 {
    let (u, v) = if u + v > 0.9 { (0.9 - v, 0.9 - u) } else { (u, v) };
    let b = &t.boundary;
    b[0] + (b[1] - b[0]) * (0.05 + u) + (b[2] - b[0]) * (0.05 + v)
}

fn scenes() -> Vec<WindtreeScene> {
    vec![
        windtree_scene(1, None, &ObstacleSpec::default()).unwrap(),
        windtree_scene(1, None, &ObstacleSpec { width: Some(0.3535), height: Some(0.309), steps: None }).unwrap(),
        windtree_scene(2, None, &ObstacleSpec::default()).unwrap(),
        windtree_scene(3, None, &ObstacleSpec::default()).unwrap(),
    ]
}

/// A start point outside the obstacle, from the unit square.
fn outside(s: &WindtreeScene, x: f64, y: f64) -> Option<Vec2> {
    let p = Vec2::new(x, y);
    (!s.in_obstacle(p)).then_some(p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn specular_law(k in 0usize..4, u in 0.0..0.85f64, v in 0.0..0.85f64, angle in 0.0..2.0 * PI) {
        let t = &tables()[k];
        let tr = billiard_trace(t, inside(t, u, v), angle, Limit::Length(150.0)).unwrap();
        for (r, &w) in tr.walls.iter().enumerate() {
            let (a, b) = t.side(w);
            let wall = (b - a).normalized();
            let din = (tr.points[r + 1] - tr.points[r]).normalized();
            let dout = (tr.points[r + 2] - tr.points[r + 1]).normalized();
            if (tr.points[r + 2] - tr.points[r + 1]).norm() < 1e-9 || (tr.points[r + 1] - tr.points[r]).norm() < 1e-9 {
                continue;
            }
            prop_assert!((din.dot(wall) - dout.dot(wall)).abs() < 1e-9);
            prop_assert!((din.cross(wall) + dout.cross(wall)).abs() < 1e-9);
        }
    }

    #[test]
    fn time_reversal(k in 0usize..4, u in 0.0..0.85f64, v in 0.0..0.85f64, angle in 0.0..2.0 * PI, len in 1.0..40.0f64) {
        let t = &tables()[k];
        let opts = BilliardOptions { detect_closure: false };
        let fwd = billiard_trace_with(t, inside(t, u, v), angle, Limit::Length(len), opts).unwrap();
        prop_assume!(fwd.termination == Termination::LengthReached);
        let n = fwd.points.len();
        let back_dir = (fwd.points[n - 2] - fwd.points[n - 1]).angle();
        let back = billiard_trace_with(t, fwd.points[n - 1], back_dir, Limit::Length(fwd.total_length()), opts).unwrap();
        prop_assume!(back.termination == Termination::LengthReached);
        prop_assert_eq!(back.walls.iter().rev().copied().collect::<Vec<_>>(), fwd.walls.clone());
        for (p, q) in fwd.points.iter().zip(back.points.iter().rev()) {
            prop_assert!(p.dist(*q) < 1e-7);
        }
    }

    #[test]
    fn unfolding_agrees_with_reflection(k in 0usize..3, u in 0.0..0.85f64, v in 0.0..0.85f64, angle in 0.0..2.0 * PI) {
        let t = &tables()[k];
        let unf = unfold_rational(t).unwrap();
        let dev = fold_check_with(&unf, inside(t, u, v), angle, 300).unwrap();
        prop_assert!(dev < 1e-6, "deviation {}", dev);
    }

    #[test]
    fn lattice_equivariance(k in 0usize..4, x in 0.0..1.0f64, y in 0.0..1.0f64, angle in 0.0..2.0 * PI,
                            i in -3i64..3, j in -3i64..3) {
        let s = &scenes()[k];
        let Some(p) = outside(s, x, y) else { return Ok(()) };
        let shift = Vec2::new(i as f64, j as f64);
        let a = windtree_trace(s, p, angle, 200.0).unwrap();
        let b = windtree_trace(s, p + shift, angle, 200.0).unwrap();
        prop_assert_eq!(&a.walls, &b.walls);
        for (pa, pb) in a.points.iter().zip(&b.points) {
            prop_assert!((*pa + shift).dist(*pb) <= 1e-9 * 200.0);
        }
    }

    #[test]
    fn windtree_length_and_reflection_bound(k in 0usize..4, x in 0.0..1.0f64, y in 0.0..1.0f64, angle in 0.0..2.0 * PI) {
        let s = &scenes()[k];
        let Some(p) = outside(s, x, y) else { return Ok(()) };
        let tr = windtree_trace(s, p, angle, 500.0).unwrap();
        if tr.termination != Termination::SingularHit {
            prop_assert!((tr.total_length() - 500.0).abs() < 1e-9);
        }
        // Consecutive reflections off distinct walls are at least the minimal spacing apart.
        let hops = tr.walls.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert!(hops as f64 * s.min_spacing() <= tr.total_length() + 1e-9);
        for w in tr.points.windows(2) {
            prop_assert!(!s.in_obstacle(w[0].lerp(w[1], 0.5)));
        }
    }
}

#[test]
fn unfolding_group_orders() {
    let sq = unfold_rational(&BilliardTable::unit_square()).unwrap();
    assert_eq!(sq.group_order, 4);
    assert_eq!(sq.surface.topology().genus, 1);
    let tri = unfold_rational(&tables()[1]).unwrap();
    assert_eq!(tri.group_order, 8);
    let t = tri.surface.topology();
    assert_eq!(t.genus, 1);
    let sum: i64 = t.cone_orders.iter().map(|&d| d as i64).sum();
    assert_eq!(sum, 2 * t.genus as i64 - 2);
    // (π/3, π/3, π/3): dihedral group of order 6, unfolds to a torus.
    let eq = unfold_rational(&tables()[2]).unwrap();
    assert_eq!(eq.group_order, 6);
    assert_eq!(eq.surface.topology().genus, 1);
    assert!(unfold_rational(&BilliardTable::triangle(PI / 17f64.sqrt(), 1.0).unwrap()).is_err());
}

#[test]
fn corner_counts_follow_the_staircase_formula() {
    for m in 1..6 {
        let s = windtree_scene(m, None, &ObstacleSpec::default()).unwrap();
        assert_eq!(s.corner_counts(), (4 * m, 4 * m - 4));
    }
}
