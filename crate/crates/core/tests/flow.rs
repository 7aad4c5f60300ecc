use std::f64::consts::PI;

use flattrace::flow::{discrepancy, trace, trace_with, Crossing, Limit, Termination, TraceOptions};
use flattrace::moduli::rotate;
use flattrace::surface::{build_from_pattern, builtin, BuiltinParams};
use flattrace::{GroupElement, SurfacePoint, Tolerance, TranslationSurface, Vec2};
use proptest::prelude::*;

fn surfaces() -> Vec<TranslationSurface> {
    let tol = Tolerance::default();
    [
        ("unit-torus", BuiltinParams::default()),
        ("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() }),
        ("slit-torus", BuiltinParams::default()),
    ]
    .iter()
    .map(|(n, p)| build_from_pattern(&builtin(n, p).unwrap(), &tol).unwrap())
    .collect()
}

/// An interior point of face `f` from barycentric weights.
fn interior(s: &TranslationSurface, f: usize, u: f64, v: f64) -> SurfacePoint {
    let f = f % s.num_faces();
    let (u, v) = if u + v > 0.9 { (0.9 - v, 0.9 - u) } else { (u, v) };
    let p = s.face(f);
    SurfacePoint::new(f, p[0] + (p[1] - p[0]) * (0.05 + u) + (p[2] - p[0]) * (0.05 + v))
}

fn reversed(word: &[Crossing]) -> Vec<Crossing> {
    word.iter().rev().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gluing_continuity_and_additivity(k in 0usize..3, f in 0usize..20, u in 0.0..0.85f64, v in 0.0..0.85f64,
                                         angle in 0.0..2.0 * PI, len in 1.0..60.0f64) {
        let s = &surfaces()[k];
        let tr = trace(s, interior(s, f, u, v), angle, Limit::Length(len)).unwrap();
        for (i, c) in tr.crossings.iter().enumerate() {
            let next = tr.segments[i + 1].entry;
            prop_assert!((tr.segments[i].exit + c.offset - next).norm() < 1e-12);
        }
        let dev = tr.developed_displacement().norm();
        prop_assert!((dev - tr.total_length).abs() <= 1e-9 * tr.total_length.max(1.0));
        if tr.termination == Termination::LengthReached {
            prop_assert!((tr.total_length - len).abs() < 1e-9);
        }
    }

    #[test]
    fn reversibility(k in 0usize..3, f in 0usize..20, u in 0.0..0.85f64, v in 0.0..0.85f64,
                     angle in 0.0..2.0 * PI, len in 1.0..30.0f64) {
        let s = &surfaces()[k];
        let opts = TraceOptions { stop_at_marked: false, detect_closure: false };
        let fwd = trace_with(s, interior(s, f, u, v), angle, Limit::Length(len), opts).unwrap();
        prop_assume!(fwd.termination == Termination::LengthReached);
        let back = trace_with(s, fwd.end(), angle + PI, Limit::Length(fwd.total_length), opts).unwrap();
        prop_assume!(back.termination == Termination::LengthReached);
        prop_assert_eq!(back.crossing_word(), reversed(&fwd.crossing_word()));
        prop_assert!(s.same_point(&back.end(), &fwd.start, 1e-9));
    }

    #[test]
    fn direction_covariance(k in 0usize..3, f in 0usize..20, u in 0.0..0.85f64, v in 0.0..0.85f64,
                            angle in 0.0..2.0 * PI, theta in 0.0..2.0 * PI) {
        let s = &surfaces()[k];
        let start = interior(s, f, u, v);
        let r = rotate(s, theta);
        let rstart = SurfacePoint::new(start.face, GroupElement::rotation(theta) * start.pos);
        let a = trace(s, start, angle, Limit::Length(20.0)).unwrap();
        let b = trace(&r, rstart, angle + theta, Limit::Length(20.0)).unwrap();
        prop_assume!(a.termination == b.termination);
        prop_assert_eq!(a.segments.len(), b.segments.len());
        for (x, y) in a.segments.iter().zip(&b.segments) {
            prop_assert!((x.length() - y.length()).abs() < 1e-9);
        }
        prop_assert_eq!(a.crossing_word(), b.crossing_word());
    }

    #[test]
    fn discrepancy_is_a_fraction(k in 0usize..3, angle in 0.0..2.0 * PI, n in 1usize..8) {
        let s = &surfaces()[k];
        let tr = trace(s, interior(s, 0, 0.3, 0.3), angle, Limit::Length(25.0)).unwrap();
        let d = discrepancy(&tr, s, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&d.discrepancy));
        let visit: f64 = d.visit_fractions.iter().sum();
        let area: f64 = d.area_fractions.iter().sum();
        prop_assert!((visit - 1.0).abs() < 1e-9 && (area - 1.0).abs() < 1e-9);
    }
}

#[test]
fn torus_rational_direction_is_periodic() {
    let s = &surfaces()[0];
    let start = s.locate(Vec2::new(0.31, 0.17)).unwrap();
    let tr = trace(s, start, (2.0f64).atan2(3.0), Limit::Length(100.0)).unwrap();
    assert_eq!(tr.termination, Termination::Closed);
    assert!((tr.total_length - 13f64.sqrt()).abs() < 1e-9);
}
