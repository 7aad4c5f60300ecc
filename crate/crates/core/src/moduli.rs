//! The GL(2,R) action, Teichmüller geodesic flow with Delaunay
//! renormalization, saddle connections and the systole diagnostic.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GroupElement, Vec2, DET_EPS};
use crate::surface::{next3, prev3, Slot, SurfacePoint, TranslationSurface};

pub const FLIP_BUDGET: usize = 1_000_000;
pub const SEARCH_BUDGET: usize = 20_000_000;

/// Largest Teichmüller time applied between two Delaunay normalizations.
const FLOW_SUBSTEP: f64 = 0.5;

/// Angle excess below which an unflippable edge is accepted as Delaunay.
const STUCK_SLACK: f64 = 1e-9;

/// Apply `m` to every face chart. The gluing combinatorics are unchanged.
pub fn apply_matrix(surface: &TranslationSurface, m: &GroupElement) -> Result<TranslationSurface> {
    let det = m.det();
    if !(det.abs() > DET_EPS) {
        return Err(Error::SingularMatrix { det });
    }
    Ok(surface.transformed(m))
}

pub fn rotate(surface: &TranslationSurface, theta: f64) -> TranslationSurface {
    surface.transformed(&GroupElement::rotation(theta))
}

/// Apply `diag(e^t, e^-t)`. With `renormalize`, the flow is applied in short
/// steps each followed by [`delaunay_normalize`], which keeps the faces from
/// degenerating.
pub fn geodesic_flow(surface: &TranslationSurface, t: f64, renormalize: bool) -> Result<TranslationSurface> {
    if !renormalize {
        return Ok(surface.transformed(&GroupElement::teichmuller(t)));
    }
    let steps = ((t.abs() / FLOW_SUBSTEP).ceil() as usize).max(1);
    let g = GroupElement::teichmuller(t / steps as f64);
    let mut s = delaunay_normalize(surface)?.0;
    for _ in 0..steps {
        s = delaunay_normalize(&s.transformed(&g))?.0;
    }
    Ok(s)
}

/// One edge flip: faces `f` and `g` were replaced; points of the old `g`
/// move by `-offset` into `f`'s chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub f: usize,
    pub g: usize,
    pub offset: Vec2,
    pub new_f: [Vec2; 3],
}

/// The flips performed by [`delaunay_normalize`], for carrying points from
/// the input surface to the normalized one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlipLog {
    pub flips: Vec<FlipRecord>,
}

impl FlipLog {
    pub fn len(&self) -> usize {
        self.flips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }

    /// Carry a point of the input surface to the normalized surface.
    pub fn map_point(&self, p: SurfacePoint) -> SurfacePoint {
        let mut p = p;
        for r in &self.flips {
            if p.face != r.f && p.face != r.g {
                continue;
            }
            let pos = if p.face == r.g { p.pos - r.offset } else { p.pos };
            let v = r.new_f;
            let inside = (0..3).all(|i| (v[next3(i)] - v[i]).cross(pos - v[i]) >= 0.0);
            p = SurfacePoint::new(if inside { r.f } else { r.g }, pos);
        }
        p
    }
}

/// Angle sum opposite the edge at `(f, i)` minus π; positive means the edge
/// violates the empty-circumcircle condition.
fn delaunay_excess(s: &TranslationSurface, f: usize, i: usize) -> f64 {
    let p = s.partner(Slot::new(f, i));
    s.corner_angle(f, prev3(i)) + s.corner_angle(p.face, prev3(p.side)) - std::f64::consts::PI
}

/// Flip edges until the triangulation is Delaunay. The flat metric is
/// untouched; only the triangulation and the charts of flipped faces change.
///
/// The criterion is the opposite-angle form of the incircle test (the two
/// angles facing an edge sum to at most π), which is well conditioned for the
/// long thin triangles produced by the flow.
pub fn delaunay_normalize(surface: &TranslationSurface) -> Result<(TranslationSurface, FlipLog)> {
    delaunay_normalize_with_budget(surface, FLIP_BUDGET)
}

pub fn delaunay_normalize_with_budget(
    surface: &TranslationSurface,
    budget: usize,
) -> Result<(TranslationSurface, FlipLog)> {
    let mut s = surface.clone();
    let mut log = FlipLog::default();
    let threshold = 1e3 * f64::EPSILON;
    // Near-cocircular edges whose quadrilateral is numerically flat cannot be
    // flipped; they are Delaunay up to rounding, so they are left alone.
    let mut stuck: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut worst: Option<(f64, usize, usize)> = None;
        for f in 0..s.num_faces() {
            for i in 0..3 {
                let p = s.partner(Slot::new(f, i));
                if (p.face, p.side) < (f, i) || stuck.contains(&(f, i)) {
                    continue;
                }
                let e = delaunay_excess(&s, f, i);
                if e > threshold && worst.is_none_or(|(w, _, _)| e > w) {
                    worst = Some((e, f, i));
                }
            }
        }
        let Some((excess, f, i)) = worst else { break };
        if log.len() >= budget {
            return Err(Error::FlipLimitExceeded { budget });
        }
        match s.flip_edge(f, i) {
            Some((g, offset)) => {
                log.flips.push(FlipRecord { f, g, offset, new_f: *s.face(f) });
                stuck.clear();
            }
            None if excess < STUCK_SLACK => stuck.push((f, i)),
            // A clearly non-Delaunay edge always has a convex quadrilateral.
            None => return Err(Error::DegenerateSurface(format!("cannot flip edge at face {f} side {i}"))),
        }
    }
    Ok((s, log))
}

/// Whether every edge satisfies the Delaunay condition up to `slack` radians.
pub fn is_delaunay(surface: &TranslationSurface, slack: f64) -> bool {
    (0..surface.num_faces()).all(|f| (0..3).all(|i| delaunay_excess(surface, f, i) <= slack))
}

/// Shortest edge of the Delaunay triangulation, which is the length of the
/// shortest saddle connection.
pub fn systole_proxy(surface: &TranslationSurface) -> Result<f64> {
    if is_delaunay(surface, 1e3 * f64::EPSILON) {
        return Ok(surface.min_edge_length());
    }
    Ok(delaunay_normalize(surface)?.0.min_edge_length())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub holonomy: Vec2,
    /// Vertex classes at the start and end (start is where `holonomy` points from).
    pub endpoints: (usize, usize),
    /// Edge ids crossed in the interior, in order.
    pub crossings: Vec<usize>,
}

impl SaddleConnection {
    pub fn length(&self) -> f64 {
        self.holonomy.norm()
    }
}

/// Upper half-plane convention: `y > 0`, or `y = 0` and `x > 0`.
fn is_canonical(h: Vec2, eps: f64) -> bool {
    if h.y.abs() <= eps * h.norm() {
        h.x > 0.0
    } else {
        h.y > 0.0
    }
}

/// All saddle connections of length at most `max_len`, each reported once
/// with its holonomy in the upper half-plane. Sorted by length.
pub fn saddle_connections(surface: &TranslationSurface, max_len: f64) -> Result<Vec<SaddleConnection>> {
    saddle_connections_with_budget(surface, max_len, SEARCH_BUDGET)
}

pub fn saddle_connections_with_budget(
    surface: &TranslationSurface,
    max_len: f64,
    budget: usize,
) -> Result<Vec<SaddleConnection>> {
    if !(max_len > 0.0 && max_len.is_finite()) {
        return Err(Error::InvalidArgument(format!("length bound must be positive (got {max_len})")));
    }
    let eps = surface.tolerance().eps_angle;
    let mut out = Vec::new();

    let mut seen_edges = HashSet::new();
    for f in 0..surface.num_faces() {
        for i in 0..3 {
            let slot = Slot::new(f, i);
            if !seen_edges.insert(surface.edge_id(slot)) {
                continue;
            }
            let h = surface.holonomy(slot);
            if h.norm() > max_len {
                continue;
            }
            let (a, b) = (surface.vertex_class(f, i), surface.vertex_class(f, next3(i)));
            let sc = if is_canonical(h, eps) {
                SaddleConnection { holonomy: h, endpoints: (a, b), crossings: vec![] }
            } else {
                SaddleConnection { holonomy: -h, endpoints: (b, a), crossings: vec![] }
            };
            out.push(sc);
        }
    }

    let mut work = 0usize;
    for f in 0..surface.num_faces() {
        for i in 0..3 {
            let v = surface.face(f);
            let p = v[i];
            let window = Window {
                slot: Slot::new(f, next3(i)),
                a: v[next3(i)],
                b: v[prev3(i)],
                shift: Vec2::ZERO,
                right: v[next3(i)] - p,
                left: v[prev3(i)] - p,
                word: Vec::new(),
            };
            let start_class = surface.vertex_class(f, i);
            let mut stack = vec![window];
            while let Some(w) = stack.pop() {
                work += 1;
                if work > budget {
                    return Err(Error::SearchBudgetExceeded { budget });
                }
                if visible_distance(p, &w) > max_len {
                    continue;
                }
                let other = surface.partner(w.slot);
                let shift = w.shift + surface.offset(w.slot);
                let gv = surface.face(other.face);
                let c = gv[prev3(other.side)] - shift;
                let h = c - p;
                let mut word = w.word.clone();
                word.push(surface.edge_id(w.slot));
                let right_of_left = h.cross(w.left) > eps * h.norm() * w.left.norm();
                let left_of_right = w.right.cross(h) > eps * h.norm() * w.right.norm();
                if right_of_left && left_of_right {
                    if h.norm() <= max_len && is_canonical(h, eps) {
                        out.push(SaddleConnection {
                            holonomy: h,
                            endpoints: (start_class, surface.vertex_class(other.face, prev3(other.side))),
                            crossings: word.clone(),
                        });
                    }
                    stack.push(Window {
                        slot: Slot::new(other.face, next3(other.side)),
                        a: w.a,
                        b: c,
                        shift,
                        right: w.right,
                        left: h,
                        word: word.clone(),
                    });
                    stack.push(Window {
                        slot: Slot::new(other.face, prev3(other.side)),
                        a: c,
                        b: w.b,
                        shift,
                        right: h,
                        left: w.left,
                        word,
                    });
                } else if !right_of_left {
                    stack.push(Window { slot: Slot::new(other.face, next3(other.side)), a: w.a, b: c, shift, word, ..w });
                } else {
                    stack.push(Window { slot: Slot::new(other.face, prev3(other.side)), a: c, b: w.b, shift, word, ..w });
                }
            }
        }
    }
    out.sort_by(|x, y| {
        x.length()
            .total_cmp(&y.length())
            .then(x.holonomy.angle().total_cmp(&y.holonomy.angle()))
            .then(x.endpoints.cmp(&y.endpoints))
    });
    Ok(out)
}

/// An edge seen from the apex through a wedge of directions, in developed
/// coordinates (the apex face's chart). `shift` maps developed coordinates
/// to the chart of the face owning `slot`, negated.
#[derive(Clone, Debug)]
struct Window {
    slot: Slot,
    a: Vec2,
    b: Vec2,
    shift: Vec2,
    right: Vec2,
    left: Vec2,
    word: Vec<usize>,
}

/// Distance from `p` to the part of the window edge inside the wedge.
fn visible_distance(p: Vec2, w: &Window) -> f64 {
    let e = w.b - w.a;
    let hit = |d: Vec2| {
        let den = d.cross(e);
        if den.abs() < f64::MIN_POSITIVE {
            return None;
        }
        let s = (w.a - p).cross(d) / den;
        Some(w.a + e * s.clamp(0.0, 1.0))
    };
    match (hit(w.right), hit(w.left)) {
        (Some(x), Some(y)) => crate::geometry::point_segment_distance(p, x, y),
        _ => crate::geometry::point_segment_distance(p, w.a, w.b),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceProfile {
    /// `(t, systole_proxy)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of `ln(systole_proxy)` against `t` over all samples.
    pub slope: f64,
}

impl DivergenceProfile {
    /// Least-squares slope of `ln(systole_proxy)` over samples with `t` in `[t0, t1]`.
    pub fn slope_between(&self, t0: f64, t1: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> =
            self.samples.iter().filter(|(t, _)| *t >= t0 - 1e-12 && *t <= t1 + 1e-12).map(|&(t, s)| (t, s.ln())).collect();
        linear_slope(&pts)
    }

    pub fn min_systole(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Systole proxy along the renormalized Teichmüller flow at `0, dt, …, t_max`.
pub fn divergence_profile(surface: &TranslationSurface, t_max: f64, dt: f64) -> Result<DivergenceProfile> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_max >= 0 (got dt={dt}, t_max={t_max})")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    let mut s = delaunay_normalize(surface)?.0;
    let mut samples = vec![(0.0, s.min_edge_length())];
    for k in 1..=n {
        s = geodesic_flow(&s, dt, true)?;
        samples.push((k as f64 * dt, s.min_edge_length()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, v)| (t, v.ln())).collect();
    let slope = linear_slope(&pts).unwrap_or(0.0);
    Ok(DivergenceProfile { samples, slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{trace, Limit};
    use crate::surface::{build_from_pattern, builtin, BuiltinParams};
    use crate::Tolerance;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn surf(name: &str, p: BuiltinParams) -> TranslationSurface {
        build_from_pattern(&builtin(name, &p).unwrap(), &Tolerance::default()).unwrap()
    }

    fn torus() -> TranslationSurface {
        surf("unit-torus", BuiltinParams::default())
    }

    fn octagon() -> TranslationSurface {
        surf("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() })
    }

    /// Gauss lattice reduction; returns the shortest nonzero lattice vector.
    fn gauss_shortest(mut u: Vec2, mut v: Vec2) -> Vec2 {
        loop {
            if v.norm_sq() < u.norm_sq() {
                std::mem::swap(&mut u, &mut v);
            }
            let m = (u.dot(v) / u.norm_sq()).round();
            if m == 0.0 {
                return u;
            }
            v -= u * m;
        }
    }

    #[test]
    fn matrix_action_examples() {
        let s = torus();
        let id = apply_matrix(&s, &GroupElement::IDENTITY).unwrap();
        assert_eq!(id, s);
        let d = apply_matrix(&s, &GroupElement::diagonal(2.0, 0.5)).unwrap();
        assert_eq!(d.period_coordinates(&[0, 1]).unwrap(), vec![Vec2::new(2.0, 0.0), Vec2::new(0.0, 0.5)]);
        assert!((d.area() - 1.0).abs() < 1e-15);
        let big = apply_matrix(&s, &GroupElement::diagonal(2.0, 2.0)).unwrap();
        assert!((big.area() - 4.0).abs() < 1e-15);
        let sing = GroupElement { a: 1.0, b: 2.0, c: 2.0, d: 4.0 };
        assert!(matches!(apply_matrix(&s, &sing), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn rotation_examples() {
        let s = torus();
        assert_eq!(rotate(&s, 0.0), s);
        let r = rotate(&s, FRAC_PI_2);
        let p = r.period_coordinates(&[0, 1]).unwrap();
        assert!((p[0] - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        assert!((p[1] - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
        let o = octagon();
        let ab = rotate(&rotate(&o, 0.3), 0.9);
        let direct = rotate(&o, 1.2);
        for (x, y) in ab.faces().iter().zip(direct.faces()) {
            for k in 0..3 {
                assert!((x[k] - y[k]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn flow_examples() {
        let s = torus();
        let e = geodesic_flow(&s, 1.0, false).unwrap();
        let p = e.period_coordinates(&[0, 1]).unwrap();
        assert!((p[0] - Vec2::new(1f64.exp(), 0.0)).norm() < 1e-14);
        assert!((p[1] - Vec2::new(0.0, (-1f64).exp())).norm() < 1e-14);
        assert_eq!(geodesic_flow(&s, 0.0, false).unwrap(), s);

        let o = rotate(&octagon(), 0.2);
        let two = geodesic_flow(&geodesic_flow(&o, 0.7, true).unwrap(), 1.1, true).unwrap();
        let one = geodesic_flow(&o, 1.8, true).unwrap();
        assert!((systole_proxy(&two).unwrap() - systole_proxy(&one).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn delaunay_already_normal_is_untouched() {
        for s in [torus(), octagon()] {
            let (n, log) = delaunay_normalize(&s).unwrap();
            assert!(log.is_empty());
            assert_eq!(n, s);
        }
    }

    #[test]
    fn delaunay_matches_lattice_reduction() {
        let s = torus();
        for (theta, t) in [(0.0, 3.0), (0.37, 3.0), (1.1, 2.2), (2.5, 4.0)] {
            let m = GroupElement::teichmuller(t).compose(&GroupElement::rotation(theta));
            let flowed = apply_matrix(&s, &m).unwrap();
            let (n, _) = delaunay_normalize(&flowed).unwrap();
            let shortest = gauss_shortest(m * Vec2::new(1.0, 0.0), m * Vec2::new(0.0, 1.0)).norm();
            assert!((n.min_edge_length() - shortest).abs() < 1e-9 * shortest.max(1.0), "{theta},{t}");
            assert!((n.area() - 1.0).abs() < 1e-12);
            assert!(is_delaunay(&n, 1e-9));
            assert_eq!(n.topology(), s.topology());
        }
        let (n, _) = delaunay_normalize(&geodesic_flow(&s, 3.0, false).unwrap()).unwrap();
        assert!((n.min_edge_length() - (-3f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn slit_torus_flow_preserves_area_and_topology() {
        let s = surf("slit-torus", BuiltinParams::default());
        let f = geodesic_flow(&rotate(&s, 0.41), 2.0, true).unwrap();
        assert!((f.area() - s.area()).abs() < 1e-12);
        assert_eq!(f.topology().cone_orders, s.topology().cone_orders);
        assert_eq!(f.topology().genus, 2);
    }

    #[test]
    fn flip_log_carries_traces() {
        let o = octagon();
        let m = GroupElement::new(1.3, 0.7, 0.2, 0.9).unwrap();
        let s = apply_matrix(&o, &m).unwrap();
        let (n, log) = delaunay_normalize(&s).unwrap();
        assert!(!log.is_empty());
        let start = SurfacePoint::new(0, (s.face(0)[0] + s.face(0)[1] + s.face(0)[2]) * (1.0 / 3.0));
        let a = trace(&s, start, 0.77, Limit::Length(6.0)).unwrap();
        let b = trace(&n, log.map_point(start), 0.77, Limit::Length(6.0)).unwrap();
        assert!(n.same_point(&log.map_point(a.end()), &b.end(), 1e-9));
    }

    #[test]
    fn systole_examples() {
        let s = torus();
        assert!((systole_proxy(&s).unwrap() - 1.0).abs() < 1e-15);
        assert!((systole_proxy(&rotate(&s, FRAC_PI_4)).unwrap() - 1.0).abs() < 1e-12);
        for t in [0.5, 2.0, 5.0] {
            let f = geodesic_flow(&s, t, true).unwrap();
            assert!((systole_proxy(&f).unwrap() - (-t).exp()).abs() < 1e-12 * (-t).exp().max(1e-3));
        }
    }

    /// Primitive lattice vectors of Z² in the upper half-plane with norm ≤ r.
    fn primitive_vectors(m: &GroupElement, r: f64) -> Vec<Vec2> {
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        let k = (r * 10.0).ceil() as i64 + 2;
        let mut out = Vec::new();
        for x in -k..=k {
            for y in -k..=k {
                if gcd(x, y) != 1 {
                    continue;
                }
                let v = *m * Vec2::new(x as f64, y as f64);
                if v.norm() <= r && is_canonical(v, 1e-9) {
                    out.push(v);
                }
            }
        }
        out
    }

    #[test]
    fn torus_saddle_connections() {
        let s = torus();
        let sc = saddle_connections(&s, 1.1).unwrap();
        let h: Vec<Vec2> = sc.iter().map(|c| c.holonomy).collect();
        assert_eq!(h.len(), 2);
        assert!(h.contains(&Vec2::new(1.0, 0.0)) && h.contains(&Vec2::new(0.0, 1.0)));
        let sc = saddle_connections(&s, 1.5).unwrap();
        assert_eq!(sc.len(), 4);
        for want in [Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)] {
            assert!(sc.iter().any(|c| (c.holonomy - want).norm() < 1e-12));
        }
        // Sheared torus against lattice enumeration.
        let m = GroupElement::new(1.0, 0.37, 0.21, 1.0 + 0.37 * 0.21).unwrap();
        let sheared = apply_matrix(&s, &m).unwrap();
        let found = saddle_connections(&sheared, 4.0).unwrap();
        let want = primitive_vectors(&m, 4.0);
        assert_eq!(found.len(), want.len());
        for w in want {
            assert!(found.iter().any(|c| (c.holonomy - w).norm() < 1e-9));
        }
    }

    #[test]
    fn octagon_saddle_connections() {
        let o = octagon();
        let sc = saddle_connections(&o, 1.0 + 1e-9).unwrap();
        assert_eq!(sc.len(), 4);
        for k in 0..4 {
            let side = Vec2::from_angle(k as f64 * PI / 4.0);
            assert!(sc.iter().any(|c| (c.holonomy - side).norm() < 1e-12 || (c.holonomy + side).norm() < 1e-12));
        }
        // The chords v_k → v_{k+2} inside the polygon have length 2cos(π/8).
        let chord2 = (2.0 + 2f64.sqrt()).sqrt();
        let sc = saddle_connections(&o, chord2 + 1e-9).unwrap();
        let n_chord = sc.iter().filter(|c| (c.length() - chord2).abs() < 1e-9).count();
        assert_eq!(n_chord, 8);
    }
}
