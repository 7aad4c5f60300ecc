//! Planar primitives shared by every other module.
//!
//! Everything here works in `f64` with explicit tolerances. Predicates snap
//! results that fall within tolerance to zero and leave the policy for
//! degenerate cases to the caller.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vector (or point) in the flat plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at angle `theta` (radians, counterclockwise from +x).
    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counterclockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    #[inline]
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn lerp(self, o: Vec2, s: f64) -> Vec2 {
        self + (o - self) * s
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// A 2×2 real matrix `(a b; c d)` with nonzero determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Determinants at or below this magnitude are treated as singular.
pub const DET_EPS: f64 = 1e-12;

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let m = GroupElement { a, b, c, d };
        if ![a, b, c, d].iter().all(|v| v.is_finite()) || m.det().abs() <= DET_EPS {
            return Err(Error::SingularMatrix { det: m.det() });
        }
        Ok(m)
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        GroupElement { a: c, b: -s, c: s, d: c }
    }

    pub fn diagonal(x: f64, y: f64) -> Self {
        GroupElement { a: x, b: 0.0, c: 0.0, d: y }
    }

    /// Teichmüller geodesic flow element `diag(e^t, e^-t)`.
    pub fn teichmuller(t: f64) -> Self {
        Self::diagonal(t.exp(), (-t).exp())
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &GroupElement) -> GroupElement {
        GroupElement {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let det = self.det();
        GroupElement { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det }
    }
}

impl Mul<GroupElement> for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.compose(&rhs)
    }
}

/// Matrix-vector product.
#[inline]
pub fn apply(m: &GroupElement, v: Vec2) -> Vec2 {
    Vec2::new(m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y)
}

impl Mul<Vec2> for GroupElement {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        apply(&self, v)
    }
}

/// Absolute length and angle tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps_len: f64,
    pub eps_angle: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps_len: 1e-9, eps_angle: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(eps_len: f64, eps_angle: f64) -> Result<Self> {
        if !(eps_len > 0.0 && eps_angle > 0.0 && eps_len.is_finite() && eps_angle.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tolerances must be positive and finite (eps_len={eps_len}, eps_angle={eps_angle})"
            )));
        }
        Ok(Tolerance { eps_len, eps_angle })
    }
}

/// Sign of `(q - p) × (r - p)`; zero when `r` is within `eps_len` of the
/// line through `p` and `q` (or the triple is otherwise degenerate).
pub fn orient(p: Vec2, q: Vec2, r: Vec2, tol: &Tolerance) -> i8 {
    let u = q - p;
    let v = r - p;
    let cr = u.cross(v);
    // Antisymmetric scale: the longest side of the triangle.
    let scale = u.norm().max(v.norm()).max((r - q).norm());
    if cr.abs() <= tol.eps_len * scale {
        0
    } else if cr > 0.0 {
        1
    } else {
        -1
    }
}

/// Intersection of the ray `origin + t·dir` with the segment `seg`.
///
/// Returns `(t, s)` with `s ∈ [0, 1]` the segment parameter, or `None` when
/// the ray misses or only touches the segment at `t ≤ eps_len`.
pub fn ray_segment_intersect(
    origin: Vec2,
    dir: Vec2,
    seg: (Vec2, Vec2),
    tol: &Tolerance,
) -> Result<Option<(f64, f64)>> {
    let (p0, p1) = seg;
    let e = p1 - p0;
    let len = e.norm();
    if len <= tol.eps_len {
        return Err(Error::DegenerateSegment);
    }
    let den = dir.cross(e);
    if den.abs() <= tol.eps_angle * len {
        // Parallel (collinear overlap is not reported as a crossing).
        return Ok(None);
    }
    let w = p0 - origin;
    let t = w.cross(e) / den;
    let s = w.cross(dir) / den;
    let s_tol = tol.eps_len / len;
    if t <= tol.eps_len || s < -s_tol || s > 1.0 + s_tol {
        return Ok(None);
    }
    Ok(Some((t, s.clamp(0.0, 1.0))))
}

/// In-circle test: `+1` if `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle `(a, b, c)`, `-1` outside, `0` on it.
pub fn incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: &Tolerance) -> Result<i8> {
    if orient(a, b, c, tol) == 0 {
        return Err(Error::DegenerateTriangle);
    }
    let (ad, bd, cd) = (a - d, b - d, c - d);
    let det = ad.norm_sq() * bd.cross(cd) + bd.norm_sq() * cd.cross(ad) + cd.norm_sq() * ad.cross(bd);
    let scale = ad.norm().max(bd.norm()).max(cd.norm());
    if det.abs() <= tol.eps_len * scale * scale * scale {
        return Ok(0);
    }
    Ok(if det > 0.0 { 1 } else { -1 })
}

/// Twice the signed area of the triangle `(a, b, c)`.
#[inline]
pub fn signed_area2(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Shoelace signed area of a closed polygon given by its vertices.
pub fn polygon_area(verts: &[Vec2]) -> f64 {
    let n = verts.len();
    (0..n).map(|i| verts[i].cross(verts[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_sq();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(e) / l2).clamp(0.0, 1.0);
    p.dist(a + e * s)
}

/// Whether the closed segments `[p1,p2]` and `[q1,q2]` properly cross or touch.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2, tol: &Tolerance) -> bool {
    let d1 = orient(q1, q2, p1, tol);
    let d2 = orient(q1, q2, p2, tol);
    let d3 = orient(p1, p2, q1, tol);
    let d4 = orient(p1, p2, q2, tol);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2| point_segment_distance(p, a, b) <= tol.eps_len;
    (d1 == 0 && on(q1, q2, p1))
        || (d2 == 0 && on(q1, q2, p2))
        || (d3 == 0 && on(p1, p2, q1))
        || (d4 == 0 && on(p1, p2, q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const T: Tolerance = Tolerance { eps_len: 1e-9, eps_angle: 1e-9 };

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn orient_examples() {
        assert_eq!(orient(v(0., 0.), v(1., 0.), v(0., 1.), &T), 1);
        assert_eq!(orient(v(0., 0.), v(1., 0.), v(2., 0.), &T), 0);
        assert_eq!(orient(v(0., 0.), v(0., 1.), v(1., 0.), &T), -1);
    }

    #[test]
    fn ray_segment_examples() {
        let hit = ray_segment_intersect(v(0., 0.), v(1., 0.), (v(1., -1.), v(1., 1.)), &T).unwrap();
        let (t, s) = hit.unwrap();
        assert!((t - 1.0).abs() < 1e-15 && (s - 0.5).abs() < 1e-15);

        let miss = ray_segment_intersect(v(0., 0.), v(1., 0.), (v(-1., 1.), v(-1., 2.)), &T).unwrap();
        assert!(miss.is_none());

        // 0.6 t + 0.8 t = 2 by hand.
        let (t, s) = ray_segment_intersect(v(0., 0.), v(0.6, 0.8), (v(0., 2.), v(2., 0.)), &T)
            .unwrap()
            .unwrap();
        assert!((t - 2.0 / 1.4).abs() < 1e-12);
        let p = v(0.6, 0.8) * t;
        assert!((p.x + p.y - 2.0).abs() < 1e-12);
        assert!((s - p.x / 2.0).abs() < 1e-12);

        assert!(matches!(
            ray_segment_intersect(v(0., 0.), v(1., 0.), (v(1., 1.), v(1., 1.)), &T),
            Err(Error::DegenerateSegment)
        ));
    }

    #[test]
    fn incircle_examples() {
        let (a, b, c) = (v(0., 0.), v(1., 0.), v(0., 1.));
        assert_eq!(incircle(a, b, c, v(1., 1.), &T).unwrap(), 0);
        assert_eq!(incircle(a, b, c, v(0.25, 0.25), &T).unwrap(), 1);
        assert_eq!(incircle(a, b, c, v(2., 2.), &T).unwrap(), -1);
        assert!(matches!(incircle(a, b, v(2., 0.), v(5., 5.), &T), Err(Error::DegenerateTriangle)));
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply(&GroupElement::IDENTITY, v(3., 4.)), v(3., 4.));
        assert_eq!(apply(&GroupElement::diagonal(2.0, 0.5), v(1., 1.)), v(2., 0.5));
        let r = apply(&GroupElement::rotation(std::f64::consts::FRAC_PI_2), v(1., 0.));
        assert!(r.x.abs() < 1e-15 && (r.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(matches!(GroupElement::new(1., 2., 2., 4.), Err(Error::SingularMatrix { .. })));
        assert!(GroupElement::new(1., 2., 3., 4.).is_ok());
    }

    fn coord() -> impl Strategy<Value = f64> {
        -10.0f64..10.0
    }

    fn point() -> impl Strategy<Value = Vec2> {
        (coord(), coord()).prop_map(|(x, y)| Vec2::new(x, y))
    }

    fn well_conditioned() -> impl Strategy<Value = GroupElement> {
        (0.0f64..std::f64::consts::TAU, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..std::f64::consts::TAU)
            .prop_map(|(r1, s1, s2, r2)| {
                // rotation · diag · rotation keeps the condition number ≤ e².
                GroupElement::rotation(r2)
                    * GroupElement::diagonal(s1.exp(), s2.exp())
                    * GroupElement::rotation(r1)
            })
    }

    proptest! {
        #[test]
        fn orient_antisymmetric(p in point(), q in point(), r in point()) {
            let o = orient(p, q, r, &T);
            prop_assert_eq!(orient(q, p, r, &T), -o);
            prop_assert_eq!(orient(p, r, q, &T), -o);
            prop_assert_eq!(orient(r, q, p, &T), -o);
        }

        #[test]
        fn apply_is_a_group_action(m1 in well_conditioned(), m2 in well_conditioned(), p in point()) {
            let lhs = apply(&m2, apply(&m1, p));
            let rhs = apply(&(m2 * m1), p);
            let scale = lhs.norm().max(1e-300);
            prop_assert!((lhs - rhs).norm() <= 1e-12 * scale.max(p.norm()));
        }

        #[test]
        fn incircle_cyclic_invariance(a in point(), b in point(), c in point(), d in point()) {
            let (a, b, c) = match orient(a, b, c, &T) {
                1 => (a, b, c),
                -1 => (a, c, b),
                _ => return Ok(()),
            };
            let s = incircle(a, b, c, d, &T).unwrap();
            prop_assert_eq!(incircle(b, c, a, d, &T).unwrap(), s);
            prop_assert_eq!(incircle(c, a, b, d, &T).unwrap(), s);
        }
    }
}
