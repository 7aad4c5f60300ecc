use flattrace::geometry::{apply, incircle, orient, GroupElement, Tolerance, Vec2};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec2> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

/// Matrices with entries in [-3, 3] and |det| bounded away from zero.
fn matrix() -> impl Strategy<Value = GroupElement> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64)
        .prop_filter("well conditioned", |(a, b, c, d)| (a * d - b * c).abs() > 0.5)
        .prop_map(|(a, b, c, d)| GroupElement::new(a, b, c, d).unwrap())
}

proptest! {
    #[test]
    fn orient_is_antisymmetric(p in point(), q in point(), r in point()) {
        let tol = Tolerance::default();
        let s = orient(p, q, r, &tol);
        prop_assert_eq!(orient(q, p, r, &tol), -s);
        prop_assert_eq!(orient(p, r, q, &tol), -s);
        prop_assert_eq!(orient(r, q, p, &tol), -s);
    }

    #[test]
    fn incircle_is_cyclic(a in point(), b in point(), c in point(), d in point()) {
        let tol = Tolerance::default();
        prop_assume!(orient(a, b, c, &tol) != 0);
        let s = incircle(a, b, c, d, &tol).unwrap();
        prop_assert_eq!(incircle(b, c, a, d, &tol).unwrap(), s);
        prop_assert_eq!(incircle(c, a, b, d, &tol).unwrap(), s);
    }

    #[test]
    fn apply_respects_composition(m1 in matrix(), m2 in matrix(), v in point()) {
        let lhs = apply(&m2, apply(&m1, v));
        let rhs = apply(&(m2 * m1), v);
        let scale = 36.0 * v.norm().max(1.0);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn inverse_and_associativity(a in matrix(), b in matrix(), c in matrix()) {
        let id = a * a.inverse();
        for (x, y) in [(id.a, 1.0), (id.b, 0.0), (id.c, 0.0), (id.d, 1.0)] {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let l = (a * b) * c;
        let r = a * (b * c);
        for (x, y) in [(l.a, r.a), (l.b, r.b), (l.c, r.c), (l.d, r.d)] {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!(((a * b).det() - a.det() * b.det()).abs() < 1e-9);
    }
}

#[test]
fn orient_snaps_near_collinear() {
    let tol = Tolerance::default();
    let p = Vec2::new(0.0, 0.0);
    let q = Vec2::new(1.0, 0.0);
    assert_eq!(orient(p, q, Vec2::new(0.5, 1e-12), &tol), 0);
    assert_eq!(orient(p, q, Vec2::new(0.5, 1e-3), &tol), 1);
}
