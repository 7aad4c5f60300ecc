//! Polygonal billiards: direct reflection, unfolding of rational tables into
//! translation surfaces, and the periodic windtree.

mod windtree;

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use windtree::{
    free_scene, windtree_scene, windtree_trace, ObstacleSpec, SceneSpec, WindtreeEvent, WindtreeScene, WindtreeTracer,
};

use crate::error::{Error, Result};
use crate::flow::{trace_with, Limit, Termination, TraceOptions};
use crate::geometry::{point_segment_distance, polygon_area, ray_segment_intersect, GroupElement, Tolerance, Vec2};
use crate::surface::{build_from_pattern, check_simple, PatternPolygon, PolygonPattern, SurfacePoint, TranslationSurface};

/// Largest denominator accepted when recognizing an angle as a rational multiple of π.
pub const MAX_ANGLE_DENOMINATOR: u64 = 1000;
const ANGLE_MATCH_TOL: f64 = 1e-9;

/// `angle = p·π/q` in lowest terms, if such `q ≤ 1000` exists within 1e-9.
pub fn rational_angle(angle: f64) -> Option<(u64, u64)> {
    let x = angle / PI;
    if !x.is_finite() || x <= 0.0 {
        return None;
    }
    // Continued-fraction convergents of x.
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > MAX_ANGLE_DENOMINATOR {
            break;
        }
        if (angle - p2 as f64 * PI / q2 as f64).abs() <= ANGLE_MATCH_TOL {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac <= 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// A simple counterclockwise polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilliardTable {
    pub boundary: Vec<Vec2>,
    /// `(p, q)` with interior angle `pπ/q` where rational.
    pub angle_data: Vec<Option<(u64, u64)>>,
    #[serde(default)]
    pub tol: Tolerance,
}

impl BilliardTable {
    pub fn new(boundary: Vec<Vec2>) -> Result<Self> {
        Self::with_tolerance(boundary, Tolerance::default())
    }

    pub fn with_tolerance(boundary: Vec<Vec2>, tol: Tolerance) -> Result<Self> {
        let n = boundary.len();
        if n < 3 {
            return Err(Error::BadTable(format!("need at least 3 vertices (got {n})")));
        }
        if boundary.iter().any(|p| !p.is_finite()) {
            return Err(Error::BadTable("non-finite vertex".into()));
        }
        check_simple(0, &boundary, &tol).map_err(|e| Error::BadTable(e.to_string()))?;
        if polygon_area(&boundary) <= 0.0 {
            return Err(Error::BadTable("boundary must be counterclockwise".into()));
        }
        let mut t = BilliardTable { boundary, angle_data: Vec::new(), tol };
        t.angle_data = (0..n).map(|i| rational_angle(t.interior_angle(i))).collect();
        if (0..n).any(|i| {
            let a = t.interior_angle(i);
            !(a > tol.eps_angle && a < 2.0 * PI - tol.eps_angle) || (a - PI).abs() <= tol.eps_angle
        }) {
            return Err(Error::BadTable("interior angles must lie in (0, 2π) and differ from π".into()));
        }
        Ok(t)
    }

    pub fn unit_square() -> Self {
        Self::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)])
            .expect("unit square is a valid table")
    }

    /// Triangle on the unit base `(0,0)–(1,0)` with interior angles `alpha`
    /// at the origin and `beta` at `(1, 0)`.
    pub fn triangle(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha + beta < PI) {
            return Err(Error::BadTable(format!("angles {alpha}, {beta} do not form a triangle")));
        }
        // Law of sines: side from the origin has length sin(beta)/sin(alpha+beta).
        let r = beta.sin() / (alpha + beta).sin();
        Self::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::from_angle(alpha) * r])
    }

    pub fn num_sides(&self) -> usize {
        self.boundary.len()
    }

    pub fn side(&self, i: usize) -> (Vec2, Vec2) {
        (self.boundary[i], self.boundary[(i + 1) % self.boundary.len()])
    }

    pub fn interior_angle(&self, i: usize) -> f64 {
        let n = self.boundary.len();
        let v = self.boundary[i];
        let to_next = self.boundary[(i + 1) % n] - v;
        let to_prev = self.boundary[(i + n - 1) % n] - v;
        let a = to_next.cross(to_prev).atan2(to_next.dot(to_prev));
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    /// Strictly inside: not on the boundary within `eps_len`.
    pub fn contains_strict(&self, p: Vec2) -> bool {
        let n = self.boundary.len();
        if (0..n).any(|i| {
            let (a, b) = self.side(i);
            point_segment_distance(p, a, b) <= self.tol.eps_len
        }) {
            return false;
        }
        // Even-odd ray casting.
        let mut inside = false;
        for i in 0..n {
            let (a, b) = self.side(i);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn inward_reflect(&self, side: usize, u: Vec2) -> Vec2 {
        let (a, b) = self.side(side);
        let e = (b - a).normalized();
        // Reflect across the side's line: keep the tangential part, flip the normal part.
        e * (2.0 * u.dot(e)) - u
    }
}

/// Reflection points of a trajectory in the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarTrajectory {
    /// Start point, every reflection point, and the final point.
    pub points: Vec<Vec2>,
    /// Cumulative length at each point.
    pub times: Vec<f64>,
    /// Wall hit at `points[k + 1]`, for each reflection `k`.
    pub walls: Vec<usize>,
    pub termination: Termination,
    /// Vertex hit on `SingularHit`.
    pub singular_vertex: Option<usize>,
}

impl PlanarTrajectory {
    pub fn reflections(&self) -> usize {
        self.walls.len()
    }

    pub fn total_length(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// `t,x,y` rows, one per point.
    pub fn to_csv_rows(&self) -> Vec<[f64; 3]> {
        self.points.iter().zip(&self.times).map(|(p, t)| [*t, p.x, p.y]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilliardOptions {
    pub detect_closure: bool,
}

impl Default for BilliardOptions {
    fn default() -> Self {
        BilliardOptions { detect_closure: true }
    }
}

/// Billiard flow in the table by specular reflection. `Limit::Crossings`
/// counts reflections.
pub fn billiard_trace(table: &BilliardTable, start: Vec2, angle: f64, limit: Limit) -> Result<PlanarTrajectory> {
    billiard_trace_with(table, start, angle, limit, BilliardOptions::default())
}

pub fn billiard_trace_with(
    table: &BilliardTable,
    start: Vec2,
    angle: f64,
    limit: Limit,
    opts: BilliardOptions,
) -> Result<PlanarTrajectory> {
    if !table.contains_strict(start) {
        return Err(Error::StartOutside);
    }
    if let Limit::Length(l) = limit {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidArgument(format!("length limit must be finite and >= 0 (got {l})")));
        }
    }
    let tol = table.tol;
    let n = table.num_sides();
    let u0 = Vec2::from_angle(angle);
    let mut u = u0;
    let mut p = start;
    let mut len = 0.0;
    let mut last_wall: Option<usize> = None;
    let mut out = PlanarTrajectory {
        points: vec![start],
        times: vec![0.0],
        walls: Vec::new(),
        termination: Termination::LengthReached,
        singular_vertex: None,
    };
    loop {
        let mut best: Option<(f64, f64, usize)> = None;
        for i in 0..n {
            if Some(i) == last_wall {
                continue;
            }
            if let Some((t, s)) = ray_segment_intersect(p, u, table.side(i), &tol)? {
                if best.is_none_or(|(bt, _, _)| t < bt) {
                    best = Some((t, s, i));
                }
            }
        }
        let Some((t, s, wall)) = best else {
            // Numerically escaped through a corner.
            out.termination = Termination::SingularHit;
            break;
        };
        if opts.detect_closure && !out.walls.is_empty() && (u - u0).norm() <= tol.eps_angle {
            let along = (start - p).dot(u);
            if along > 0.0 && along <= t && point_segment_distance(start, p, p + u * t) <= tol.eps_len {
                len += along;
                out.points.push(start);
                out.times.push(len);
                out.termination = Termination::Closed;
                break;
            }
        }
        if let Limit::Length(max) = limit {
            if len + t >= max {
                out.points.push(p + u * (max - len));
                out.times.push(max);
                break;
            }
        }
        let (a, b) = table.side(wall);
        let q = a.lerp(b, s);
        len += t;
        out.points.push(q);
        out.times.push(len);
        let side_len = a.dist(b);
        if s * side_len <= tol.eps_len || (1.0 - s) * side_len <= tol.eps_len {
            out.termination = Termination::SingularHit;
            out.singular_vertex = Some(if s < 0.5 { wall } else { (wall + 1) % n });
            break;
        }
        out.walls.push(wall);
        if let Limit::Crossings(k) = limit {
            if out.walls.len() >= k {
                out.termination = Termination::CrossingsReached;
                break;
            }
        }
        u = table.inward_reflect(wall, u);
        p = q;
        last_wall = Some(wall);
    }
    Ok(out)
}

/// Element of the dihedral group `D_N` generated by the side reflections.
/// `Rot(k)` rotates by `2πk/N`; `Refl(k)` reflects across the line at angle
/// `θ₀ + πk/N`, where `θ₀` is the direction of side 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Dihedral {
    Rot(u64),
    Refl(u64),
}

impl Dihedral {
    fn mul(self, rhs: Dihedral, n: u64) -> Dihedral {
        use Dihedral::*;
        match (self, rhs) {
            (Rot(a), Rot(b)) => Rot((a + b) % n),
            (Rot(a), Refl(b)) => Refl((a + b) % n),
            (Refl(a), Rot(b)) => Refl((a + n - b) % n),
            (Refl(a), Refl(b)) => Rot((a + n - b) % n),
        }
    }
}

/// A rational table unfolded into a translation surface, with the folding
/// map back to the table.
#[derive(Clone, Debug)]
pub struct Unfolding {
    pub table: BilliardTable,
    pub surface: TranslationSurface,
    /// Linear part of each copy; copy 0 is the table itself.
    pub copies: Vec<GroupElement>,
    /// Order of the reflection group (number of copies).
    pub group_order: usize,
}

impl Unfolding {
    fn copy_of(&self, face: usize) -> &GroupElement {
        &self.copies[self.surface.face_polygon(face)]
    }

    /// Table point under a surface point.
    pub fn fold_point(&self, p: &SurfacePoint) -> Vec2 {
        self.copy_of(p.face).inverse() * p.pos
    }

    /// Table direction of a surface direction at a point of `face`.
    pub fn fold_direction(&self, face: usize, u: Vec2) -> Vec2 {
        self.copy_of(face).inverse() * u
    }

    /// Surface point over a table point, in the unreflected copy.
    pub fn lift_point(&self, p: Vec2) -> Option<SurfacePoint> {
        self.surface.locate_in_polygon(0, p)
    }
}

/// Glue `|G|` reflected copies of a rational table along their sides, where
/// `G` is the group generated by the linear parts of the side reflections.
pub fn unfold_rational(table: &BilliardTable) -> Result<Unfolding> {
    let n_sides = table.num_sides();
    let mut big_n = 1u64;
    for (i, a) in table.angle_data.iter().enumerate() {
        let Some((_, q)) = a else {
            return Err(Error::IrrationalAngle { vertex: i, angle: table.interior_angle(i) });
        };
        big_n = big_n / gcd(big_n, *q) * q;
        if big_n > MAX_ANGLE_DENOMINATOR * MAX_ANGLE_DENOMINATOR {
            return Err(Error::BadTable("reflection group is too large".into()));
        }
    }
    let dir = |i: usize| {
        let (a, b) = table.side(i);
        (b - a).angle()
    };
    let theta0 = dir(0);
    // Side i's line sits at angle θ₀ + π·m_i/N.
    let mut gens = Vec::with_capacity(n_sides);
    for i in 0..n_sides {
        let x = (dir(i) - theta0) / (PI / big_n as f64);
        let m = x.round();
        if (x - m).abs() > 1e-6 {
            return Err(Error::BadTable(format!("side {i} direction is inconsistent with the angle data")));
        }
        gens.push(Dihedral::Refl((m as i64).rem_euclid(big_n as i64) as u64));
    }
    let reflection = |i: usize| {
        let (a, b) = table.side(i);
        let e = (b - a).normalized();
        GroupElement { a: e.x * e.x - e.y * e.y, b: 2.0 * e.x * e.y, c: 2.0 * e.x * e.y, d: e.y * e.y - e.x * e.x }
    };

    // Breadth-first enumeration by right multiplication with generators.
    let mut elems = vec![Dihedral::Rot(0)];
    let mut mats = vec![GroupElement::IDENTITY];
    let mut index: HashMap<Dihedral, usize> = HashMap::from([(Dihedral::Rot(0), 0)]);
    let mut head = 0;
    while head < elems.len() {
        for (i, &g) in gens.iter().enumerate() {
            let h = elems[head].mul(g, big_n);
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(h) {
                e.insert(elems.len());
                elems.push(h);
                mats.push(mats[head] * reflection(i));
            }
        }
        head += 1;
    }

    let mut polygons = Vec::with_capacity(elems.len());
    let mut pairing = vec![0usize; elems.len() * n_sides];
    let edge_index = |copy: usize, side: usize, det_pos: bool| {
        copy * n_sides + if det_pos { side } else { n_sides - 1 - side }
    };
    for (c, (g, m)) in elems.iter().zip(&mats).enumerate() {
        let det_pos = m.det() > 0.0;
        let verts: Vec<Vec2> = if det_pos {
            table.boundary.iter().map(|&v| *m * v).collect()
        } else {
            std::iter::once(0).chain((1..n_sides).rev()).map(|k| *m * table.boundary[k]).collect()
        };
        let edges = (0..n_sides).map(|k| verts[(k + 1) % n_sides] - verts[k]).collect();
        polygons.push(PatternPolygon::new(verts[0], edges));
        for (i, &r) in gens.iter().enumerate() {
            let other = index[&g.mul(r, big_n)];
            let other_pos = mats[other].det() > 0.0;
            pairing[edge_index(c, i, det_pos)] = edge_index(other, i, other_pos);
        }
    }
    let surface = build_from_pattern(&PolygonPattern { polygons, pairing }, &table.tol)?;
    Ok(Unfolding { table: table.clone(), surface, group_order: mats.len(), copies: mats })
}

/// Largest distance between the reflection points of the direct billiard
/// trace and those of the folded straight line on the unfolding, over the
/// first `n_reflections` reflections. Corner hits must agree too: if both
/// methods stop at a corner the length difference counts as deviation; if
/// only one does, the deviation is infinite.
pub fn fold_check(table: &BilliardTable, start: Vec2, angle: f64, n_reflections: usize) -> Result<f64> {
    let unf = unfold_rational(table)?;
    fold_check_with(&unf, start, angle, n_reflections)
}

pub fn fold_check_with(unf: &Unfolding, start: Vec2, angle: f64, n_reflections: usize) -> Result<f64> {
    let direct = billiard_trace_with(
        &unf.table,
        start,
        angle,
        Limit::Crossings(n_reflections),
        BilliardOptions { detect_closure: false },
    )?;
    let lifted = unf.lift_point(start).ok_or(Error::StartOutside)?;
    let budget = direct.total_length() + 1e-7;
    let opts = TraceOptions { stop_at_marked: true, detect_closure: false };
    let tr = trace_with(&unf.surface, lifted, angle, Limit::Length(budget), opts)?;

    let mut folded: Vec<(Vec2, f64)> = Vec::new();
    let mut len = 0.0;
    for (k, seg) in tr.segments.iter().enumerate() {
        len += seg.length();
        if let Some(c) = tr.crossings.get(k) {
            if c.slot.is_some_and(|s| unf.surface.slot_label(s).is_some()) {
                folded.push((unf.fold_point(&SurfacePoint::new(seg.face, seg.exit)), len));
            }
        }
    }
    let direct_refl = &direct.points[1..=direct.reflections()];
    let mut dev: f64 = 0.0;
    for (k, p) in direct_refl.iter().enumerate() {
        match folded.get(k) {
            Some((q, _)) => dev = dev.max(p.dist(*q)),
            None => return Ok(f64::INFINITY),
        }
    }
    let direct_singular = direct.termination == Termination::SingularHit;
    let unfolded_singular = tr.termination == Termination::SingularHit;
    if direct_singular || unfolded_singular {
        if direct_singular != unfolded_singular {
            return Ok(f64::INFINITY);
        }
        dev = dev.max((direct.total_length() - tr.total_length).abs());
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn rational_angles() {
        assert_eq!(rational_angle(FRAC_PI_2), Some((1, 2)));
        assert_eq!(rational_angle(3.0 * PI / 7.0), Some((3, 7)));
        assert_eq!(rational_angle(PI / 17f64.sqrt()), None);
        assert_eq!(rational_angle(PI * 997.0 / 1000.0), Some((997, 1000)));
    }

    #[test]
    fn square_center_diagonal_hits_corner() {
        let sq = BilliardTable::unit_square();
        let tr = billiard_trace(&sq, Vec2::new(0.5, 0.5), FRAC_PI_4, Limit::Length(100.0)).unwrap();
        assert_eq!(tr.termination, Termination::SingularHit);
        assert!((tr.total_length() - SQRT_2 / 2.0).abs() < 1e-12);
        assert_eq!(tr.singular_vertex, Some(2));
    }

    #[test]
    fn square_diamond_orbit() {
        let sq = BilliardTable::unit_square();
        let tr = billiard_trace(&sq, Vec2::new(0.75, 0.25), FRAC_PI_4, Limit::Length(100.0)).unwrap();
        assert_eq!(tr.termination, Termination::Closed);
        assert_eq!(tr.reflections(), 4);
        assert!((tr.total_length() - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn square_slope_half_orbit() {
        // Unfolded to the 2×2 torus, direction (2,1) closes after displacement
        // (4,2): 4 vertical and 2 horizontal wall crossings.
        let sq = BilliardTable::unit_square();
        let tr = billiard_trace(&sq, Vec2::new(0.5, 0.5), 0.5f64.atan(), Limit::Length(100.0)).unwrap();
        assert_eq!(tr.termination, Termination::Closed);
        assert_eq!(tr.walls.len(), 6);
        assert!((tr.total_length() - 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn start_on_boundary_rejected() {
        let sq = BilliardTable::unit_square();
        assert!(matches!(billiard_trace(&sq, Vec2::new(0.5, 0.0), 1.0, Limit::Length(1.0)), Err(Error::StartOutside)));
        assert!(matches!(billiard_trace(&sq, Vec2::new(1.5, 0.5), 1.0, Limit::Length(1.0)), Err(Error::StartOutside)));
    }

    #[test]
    fn specular_law_and_time_reversal() {
        let t = BilliardTable::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(1.0, 0.6),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        let tr = billiard_trace(&t, Vec2::new(0.3, 0.2), 0.913, Limit::Length(150.0)).unwrap();
        assert_eq!(tr.termination, Termination::LengthReached);
        assert!(tr.reflections() > 50);
        for k in 0..tr.reflections() {
            let (a, b) = t.side(tr.walls[k]);
            let e = (b - a).normalized();
            let din = (tr.points[k + 1] - tr.points[k]).normalized();
            let dout = (tr.points[k + 2] - tr.points[k + 1]).normalized();
            assert!((din.cross(e) + dout.cross(e)).abs() < 1e-9);
            assert!((din.dot(e) - dout.dot(e)).abs() < 1e-9);
        }
        let n = tr.points.len();
        let end = tr.points[n - 1];
        let back_dir = (tr.points[n - 2] - end).angle();
        let back = billiard_trace(&t, end, back_dir, Limit::Length(150.0)).unwrap();
        let mut walls = tr.walls.clone();
        walls.reverse();
        assert_eq!(back.walls, walls);
        for k in 1..n {
            assert!((back.points[k] - tr.points[n - 1 - k]).norm() < 1e-7);
        }
    }

    #[test]
    fn square_unfolds_to_torus() {
        let u = unfold_rational(&BilliardTable::unit_square()).unwrap();
        assert_eq!(u.group_order, 4);
        let topo = u.surface.topology();
        assert_eq!(topo.genus, 1);
        assert!(topo.cone_orders.is_empty());
        assert!((u.surface.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn right_isosceles_unfolds_to_genus_one() {
        let t = BilliardTable::triangle(FRAC_PI_2, FRAC_PI_4).unwrap();
        let u = unfold_rational(&t).unwrap();
        assert_eq!(u.group_order, 8);
        let topo = u.surface.topology();
        // Oracle: the 8 corners at the right angle form 2 classes of angle 2π;
        // each π/4 vertex gives one class of angle 2π. V − E + F = 4 − 12 + 8.
        assert_eq!(topo.genus, 1);
        assert!(topo.cone_orders.is_empty());
        let total_angle: f64 = u.surface.cone_points().iter().map(|c| c.angle).sum();
        assert!((total_angle - 8.0 * PI).abs() < 1e-9);
        assert_eq!(topo.num_vertices, 4);
    }

    #[test]
    fn irrational_triangle_rejected() {
        let t = BilliardTable::triangle(PI / 17f64.sqrt(), FRAC_PI_4).unwrap();
        assert!(matches!(unfold_rational(&t), Err(Error::IrrationalAngle { vertex: 0, .. })));
    }

    #[test]
    fn fold_check_examples() {
        let sq = BilliardTable::unit_square();
        let dev = fold_check(&sq, Vec2::new(0.31, 0.62), 0.7137, 1000).unwrap();
        assert!(dev < 1e-9, "{dev}");
        let tri = BilliardTable::triangle(FRAC_PI_2, FRAC_PI_4).unwrap();
        let dev = fold_check(&tri, Vec2::new(0.2, 0.3), 2.1111, 1000).unwrap();
        assert!(dev < 1e-9, "{dev}");
        // Aimed at the corner (1, 1): both methods stop there.
        let dev = fold_check(&sq, Vec2::new(0.5, 0.5), FRAC_PI_4, 10).unwrap();
        assert!(dev < 1e-9, "{dev}");
    }
}
