//! Triangulated translation surfaces.
//!
//! A [`TranslationSurface`] is a set of triangles, each living in its own
//! planar chart, together with an involution on the face-edge slots. Two glued
//! slots carry opposite edge vectors and the chart transition is a pure
//! translation, so directions are global and the flat metric has trivial
//! holonomy. Vertex classes (points of the surface coming from triangle
//! corners) carry total angles that are integer multiples of `2π`.

mod builtin;
mod pattern;
mod spec;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

pub use builtin::{builtin, regular_polygon_pattern, slit_torus_pattern, torus_pattern, BuiltinParams, BUILTIN_NAMES};
pub use spec::SurfaceSpec;
pub use pattern::{ear_clip, PatternPolygon, PolygonPattern};
pub(crate) use pattern::check_simple;

use crate::error::{Error, Result};
use crate::geometry::{orient, signed_area2, GroupElement, Tolerance, Vec2};

/// One side of one face: edge `side` runs from corner `side` to corner `side + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub face: usize,
    pub side: usize,
}

impl Slot {
    #[inline]
    pub fn new(face: usize, side: usize) -> Self {
        Slot { face, side }
    }
}

#[inline]
pub(crate) fn next3(i: usize) -> usize {
    if i == 2 {
        0
    } else {
        i + 1
    }
}

#[inline]
pub(crate) fn prev3(i: usize) -> usize {
    if i == 0 {
        2
    } else {
        i - 1
    }
}

/// A point of the surface: a face and a position in that face's chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub face: usize,
    pub pos: Vec2,
}

impl SurfacePoint {
    pub fn new(face: usize, pos: Vec2) -> Self {
        SurfacePoint { face, pos }
    }
}

/// A vertex class with its total angle and order `d` (angle = 2π(d+1)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub class: usize,
    pub angle: f64,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceTopology {
    pub genus: u32,
    /// Orders of the true cone points (d ≥ 1), sorted in decreasing order.
    pub cone_orders: Vec<u32>,
    pub num_faces: usize,
    pub num_edges: usize,
    pub num_vertices: usize,
}

impl SurfaceTopology {
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.num_edges as i64 + self.num_faces as i64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationSurface {
    pub(crate) faces: Vec<[Vec2; 3]>,
    pub(crate) partner: Vec<[Slot; 3]>,
    pub(crate) vclass: Vec<[usize; 3]>,
    pub(crate) edge_id: Vec<[usize; 3]>,
    pub(crate) slot_label: Vec<[Option<usize>; 3]>,
    pub(crate) label_slot: Vec<Option<Slot>>,
    /// Holonomy of each pattern edge, kept exactly rather than re-derived from charts.
    pub(crate) periods: Vec<Vec2>,
    pub(crate) face_polygon: Vec<usize>,
    pub(crate) cones: Vec<ConePoint>,
    pub(crate) num_edges: usize,
    pub(crate) area: f64,
    pub(crate) tol: Tolerance,
}

impl TranslationSurface {
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_vertex_classes(&self) -> usize {
        self.cones.len()
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    /// Vertices of face `f` in its own chart (counterclockwise).
    #[inline]
    pub fn face(&self, f: usize) -> &[Vec2; 3] {
        &self.faces[f]
    }

    pub fn faces(&self) -> &[[Vec2; 3]] {
        &self.faces
    }

    #[inline]
    pub fn partner(&self, s: Slot) -> Slot {
        self.partner[s.face][s.side]
    }

    /// Undirected edge id shared by a slot and its partner.
    #[inline]
    pub fn edge_id(&self, s: Slot) -> usize {
        self.edge_id[s.face][s.side]
    }

    /// Vertex class of corner `i` of face `f`.
    #[inline]
    pub fn vertex_class(&self, f: usize, i: usize) -> usize {
        self.vclass[f][i]
    }

    pub fn cone_points(&self) -> &[ConePoint] {
        &self.cones
    }

    /// Whether the vertex class is a regular (angle 2π) marked point.
    #[inline]
    pub fn is_regular_class(&self, class: usize) -> bool {
        self.cones[class].order == 0
    }

    /// The polygon of the defining pattern that face `f` was cut from.
    pub fn face_polygon(&self, f: usize) -> usize {
        self.face_polygon[f]
    }

    /// Pattern edge carried by a slot, if it is a side of the defining pattern.
    pub fn slot_label(&self, s: Slot) -> Option<usize> {
        self.slot_label[s.face][s.side]
    }

    /// Slot currently carrying pattern edge `k` (with the pattern's orientation).
    pub fn label_slot(&self, k: usize) -> Option<Slot> {
        self.label_slot.get(k).copied().flatten()
    }

    /// Edge vector of a slot.
    #[inline]
    pub fn holonomy(&self, s: Slot) -> Vec2 {
        let v = &self.faces[s.face];
        v[next3(s.side)] - v[s.side]
    }

    /// Translation taking the chart of `s.face` to the chart of its partner face.
    #[inline]
    pub fn offset(&self, s: Slot) -> Vec2 {
        let p = self.partner(s);
        self.faces[p.face][next3(p.side)] - self.faces[s.face][s.side]
    }

    /// Interior angle at corner `i` of face `f`.
    pub fn corner_angle(&self, f: usize, i: usize) -> f64 {
        let v = &self.faces[f];
        let d1 = v[next3(i)] - v[i];
        let d2 = v[prev3(i)] - v[i];
        d1.cross(d2).atan2(d1.dot(d2))
    }

    /// Corner reached by rotating counterclockwise around the vertex at corner
    /// `(f, i)`: across the edge from corner `i` to corner `i - 1`.
    pub fn ccw_corner(&self, f: usize, i: usize) -> (usize, usize) {
        let p = self.partner(Slot::new(f, prev3(i)));
        (p.face, p.side)
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn topology(&self) -> SurfaceTopology {
        let v = self.cones.len() as i64;
        let e = self.num_edges as i64;
        let f = self.faces.len() as i64;
        let chi = v - e + f;
        let genus = ((2 - chi) / 2) as u32;
        let mut cone_orders: Vec<u32> = self.cones.iter().map(|c| c.order).filter(|&d| d > 0).collect();
        cone_orders.sort_unstable_by(|a, b| b.cmp(a));
        let total: i64 = cone_orders.iter().map(|&d| d as i64).sum();
        assert_eq!(total, 2 * genus as i64 - 2, "Gauss-Bonnet violated: construction bug");
        SurfaceTopology {
            genus,
            cone_orders,
            num_faces: self.faces.len(),
            num_edges: self.num_edges,
            num_vertices: self.cones.len(),
        }
    }

    /// Holonomy vectors of the designated pattern edges.
    pub fn period_coordinates(&self, basis: &[usize]) -> Result<Vec<Vec2>> {
        basis
            .iter()
            .map(|&k| self.periods.get(k).copied().ok_or(Error::UnknownEdge(k)))
            .collect()
    }

    /// Rescale every chart so the total area is one.
    pub fn normalize_area(&self) -> TranslationSurface {
        let s = 1.0 / self.area.sqrt();
        let mut out = self.transformed(&GroupElement::diagonal(s, s));
        out.area = 1.0;
        out
    }

    /// Apply a linear map to every chart. Orientation-reversing maps reorder
    /// each triangle so faces stay counterclockwise.
    pub(crate) fn transformed(&self, m: &GroupElement) -> TranslationSurface {
        let det = m.det();
        let periods = self.periods.iter().map(|v| *m * *v).collect();
        if det > 0.0 {
            let mut out = self.clone();
            out.periods = periods;
            for f in out.faces.iter_mut() {
                for p in f.iter_mut() {
                    *p = *m * *p;
                }
            }
            out.area = self.area * det;
            return out;
        }
        // corner i ↦ new corner (3 - i) % 3 ; side i ↦ new side 2 - i
        let corner = |i: usize| (3 - i) % 3;
        let side = |i: usize| 2 - i;
        let n = self.faces.len();
        let mut out = self.clone();
        for f in 0..n {
            for i in 0..3 {
                out.faces[f][corner(i)] = *m * self.faces[f][i];
                out.vclass[f][corner(i)] = self.vclass[f][i];
                let p = self.partner[f][i];
                out.partner[f][side(i)] = Slot::new(p.face, side(p.side));
                out.edge_id[f][side(i)] = self.edge_id[f][i];
                // The slot now runs backwards, i.e. it carries its old partner's label.
                out.slot_label[f][side(i)] = self.slot_label[p.face][p.side];
            }
        }
        out.label_slot.iter_mut().for_each(|s| *s = None);
        for f in 0..n {
            for i in 0..3 {
                if let Some(k) = out.slot_label[f][i] {
                    out.label_slot[k] = Some(Slot::new(f, i));
                }
            }
        }
        out.area = self.area * det.abs();
        out.periods = periods;
        out
    }

    /// Whether `p` lies in the closed triangle of `face` (within `eps_len`).
    pub fn contains(&self, face: usize, p: Vec2) -> bool {
        let v = &self.faces[face];
        (0..3).all(|i| orient(v[i], v[next3(i)], p, &self.tol) >= 0)
    }

    /// First face (preferring strict interiors) whose chart triangle contains `p`.
    ///
    /// Useful right after construction, when faces cut from one polygon share
    /// that polygon's chart.
    pub fn locate(&self, p: Vec2) -> Option<SurfacePoint> {
        let strict = (0..self.faces.len()).find(|&f| {
            let v = &self.faces[f];
            (0..3).all(|i| orient(v[i], v[next3(i)], p, &self.tol) > 0)
        });
        strict
            .or_else(|| (0..self.faces.len()).find(|&f| self.contains(f, p)))
            .map(|f| SurfacePoint::new(f, p))
    }

    /// Like [`locate`](Self::locate) but restricted to faces cut from `polygon`.
    pub fn locate_in_polygon(&self, polygon: usize, p: Vec2) -> Option<SurfacePoint> {
        (0..self.faces.len())
            .filter(|&f| self.face_polygon[f] == polygon)
            .find(|&f| self.contains(f, p))
            .map(|f| SurfacePoint::new(f, p))
    }

    /// Distance from a point of `face` to the nearest vertex of that face.
    pub fn distance_to_vertex(&self, pt: &SurfacePoint) -> f64 {
        self.faces[pt.face].iter().map(|v| v.dist(pt.pos)).fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box `(min, max)` of all face charts.
    pub fn chart_bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for f in &self.faces {
            for p in f {
                lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
            }
        }
        (lo, hi)
    }

    /// Length of the shortest edge of the triangulation.
    pub fn min_edge_length(&self) -> f64 {
        self.faces
            .iter()
            .flat_map(|v| (0..3).map(move |i| (v[next3(i)] - v[i]).norm()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether two surface points coincide within `tol`, also across shared edges.
    pub fn same_point(&self, p: &SurfacePoint, q: &SurfacePoint, tol: f64) -> bool {
        self.point_distance(p, q) <= tol
    }

    /// Distance between nearby points in the same face or in faces sharing an
    /// edge that `p` lies close to; `INFINITY` otherwise.
    pub fn point_distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> f64 {
        if p.face == q.face {
            return p.pos.dist(q.pos);
        }
        let v = &self.faces[p.face];
        (0..3)
            .filter(|&i| self.partner(Slot::new(p.face, i)).face == q.face)
            .map(|i| {
                let across = (p.pos + self.offset(Slot::new(p.face, i))).dist(q.pos);
                across.max(crate::geometry::point_segment_distance(p.pos, v[i], v[next3(i)]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Flip the diagonal of the quadrilateral formed by face `f` and the
    /// face across its side `i`. Both new faces live in `f`'s chart. Returns
    /// the other face and the chart translation from its old chart to the new
    /// one, or `None` when the quadrilateral is not strictly convex.
    pub(crate) fn flip_edge(&mut self, f: usize, i: usize) -> Option<(usize, Vec2)> {
        let Slot { face: g, side: j } = self.partner[f][i];
        if g == f {
            return None;
        }
        let o = self.offset(Slot::new(f, i));
        let (i1, i2) = (next3(i), prev3(i));
        let (j1, j2) = (next3(j), prev3(j));
        let vf = self.faces[f];
        let (a, b, c) = (vf[i], vf[i1], vf[i2]);
        let d = self.faces[g][j2] - o;
        if !(signed_area2(a, d, c) > 0.0 && signed_area2(d, b, c) > 0.0) {
            return None;
        }
        let (ca, cb, cc, cd) = (self.vclass[f][i], self.vclass[f][i1], self.vclass[f][i2], self.vclass[g][j2]);
        let diag_id = self.edge_id[f][i];

        // Outer slots of the quadrilateral and where they end up.
        let old = [Slot::new(f, i1), Slot::new(f, i2), Slot::new(g, j1), Slot::new(g, j2)];
        let new = [Slot::new(g, 1), Slot::new(f, 2), Slot::new(f, 0), Slot::new(g, 0)];
        let remap = |s: Slot| old.iter().position(|&x| x == s).map_or(s, |k| new[k]);
        let partners: Vec<Slot> = old.iter().map(|&s| self.partner(s)).collect();
        let ids: Vec<usize> = old.iter().map(|&s| self.edge_id[s.face][s.side]).collect();
        let labels: Vec<Option<usize>> = old.iter().map(|&s| self.slot_label[s.face][s.side]).collect();
        if let Some(k) = self.slot_label[f][i] {
            self.label_slot[k] = None;
        }
        if let Some(k) = self.slot_label[g][j] {
            self.label_slot[k] = None;
        }

        self.faces[f] = [a, d, c];
        self.faces[g] = [d, b, c];
        self.vclass[f] = [ca, cd, cc];
        self.vclass[g] = [cd, cb, cc];
        self.face_polygon[g] = self.face_polygon[f];
        for k in 0..4 {
            let s = new[k];
            let p = remap(partners[k]);
            self.partner[s.face][s.side] = p;
            self.partner[p.face][p.side] = s;
            self.edge_id[s.face][s.side] = ids[k];
            self.slot_label[s.face][s.side] = labels[k];
            if let Some(l) = labels[k] {
                self.label_slot[l] = Some(s);
            }
        }
        self.partner[f][1] = Slot::new(g, 2);
        self.partner[g][2] = Slot::new(f, 1);
        self.edge_id[f][1] = diag_id;
        self.edge_id[g][2] = diag_id;
        self.slot_label[f][1] = None;
        self.slot_label[g][2] = None;
        Some((g, o))
    }

    /// Structural checks: involutive gluing, opposite edge vectors,
    /// positive face areas. Recomputes vertex classes and cone angles.
    pub(crate) fn finalize(mut self) -> Result<TranslationSurface> {
        let n = self.faces.len();
        if n == 0 {
            return Err(Error::DegenerateSurface("no faces".into()));
        }
        let mut area = 0.0;
        for (f, v) in self.faces.iter().enumerate() {
            let a2 = signed_area2(v[0], v[1], v[2]);
            if !(a2 > 0.0) || orient(v[0], v[1], v[2], &self.tol) <= 0 {
                return Err(Error::DegenerateSurface(format!("face {f} has zero or negative area")));
            }
            area += 0.5 * a2;
        }
        for f in 0..n {
            for i in 0..3 {
                let s = Slot::new(f, i);
                let p = self.partner(s);
                if p.face >= n || p.side > 2 || self.partner(p) != s || p == s {
                    return Err(Error::DegenerateSurface(format!("gluing is not an involution at {s:?}")));
                }
                let h = self.holonomy(s);
                let mismatch = (h + self.holonomy(p)).norm();
                if mismatch > self.tol.eps_len * h.norm().max(1.0) {
                    return Err(Error::BadPairing(format!("slots {s:?} and {p:?} are not opposite translates")));
                }
            }
        }

        // Connectivity.
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(f) = stack.pop() {
            for i in 0..3 {
                let g = self.partner[f][i].face;
                if !seen[g] {
                    seen[g] = true;
                    stack.push(g);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::DegenerateSurface("surface is not connected".into()));
        }

        // Vertex classes by union-find over corners glued across edges.
        let mut uf = UnionFind::new(3 * n);
        for f in 0..n {
            for i in 0..3 {
                let p = self.partner[f][i];
                uf.union(3 * f + i, 3 * p.face + next3(p.side));
                uf.union(3 * f + next3(i), 3 * p.face + p.side);
            }
        }
        let mut class_of_root = std::collections::HashMap::new();
        let mut angles: Vec<f64> = Vec::new();
        for f in 0..n {
            for i in 0..3 {
                let r = uf.find(3 * f + i);
                let next_id = class_of_root.len();
                let c = *class_of_root.entry(r).or_insert(next_id);
                if c == angles.len() {
                    angles.push(0.0);
                }
                self.vclass[f][i] = c;
                angles[c] += self.corner_angle(f, i);
            }
        }
        let mut cones = Vec::with_capacity(angles.len());
        for (c, &angle) in angles.iter().enumerate() {
            let turns = (angle / TAU).round();
            if turns < 1.0 || (angle - turns * TAU).abs() > 1e-6 {
                return Err(Error::DegenerateSurface(format!(
                    "vertex class {c} has angle {angle}, not a positive multiple of 2π"
                )));
            }
            cones.push(ConePoint { class: c, angle, order: turns as u32 - 1 });
        }

        // Edge ids: one per glued pair.
        let mut edge_id = vec![[usize::MAX; 3]; n];
        let mut next_id = 0;
        for f in 0..n {
            for i in 0..3 {
                if edge_id[f][i] == usize::MAX {
                    let p = self.partner[f][i];
                    edge_id[f][i] = next_id;
                    edge_id[p.face][p.side] = next_id;
                    next_id += 1;
                }
            }
        }
        self.edge_id = edge_id;
        self.num_edges = next_id;
        self.cones = cones;
        self.area = area;

        let chi = self.cones.len() as i64 - self.num_edges as i64 + n as i64;
        if chi > 0 || chi % 2 != 0 {
            return Err(Error::DegenerateSurface(format!("Euler characteristic {chi} is not that of a closed orientable surface of genus ≥ 1")));
        }
        let total: i64 = self.cones.iter().map(|c| c.order as i64).sum();
        if total != -chi {
            return Err(Error::DegenerateSurface(format!("cone orders sum to {total}, expected {}", -chi)));
        }
        Ok(self)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Glue the polygons of `pattern` along its pairing and triangulate them.
pub fn build_from_pattern(pattern: &PolygonPattern, tol: &Tolerance) -> Result<TranslationSurface> {
    pattern.validate(tol)?;

    let mut faces = Vec::new();
    let mut face_polygon = Vec::new();
    // Global pattern edge -> slot holding it (same orientation).
    let mut label_slot: Vec<Option<Slot>> = vec![None; pattern.num_edges()];
    let mut diagonal_partner: Vec<(Slot, Slot)> = Vec::new();

    let mut base = 0;
    for (pi, poly) in pattern.polygons.iter().enumerate() {
        let verts = poly.vertices();
        let m = verts.len();
        let tris = ear_clip(&verts, tol)?;
        let mut open: std::collections::HashMap<(usize, usize), Slot> = std::collections::HashMap::new();
        for t in tris {
            let f = faces.len();
            faces.push([verts[t[0]], verts[t[1]], verts[t[2]]]);
            face_polygon.push(pi);
            for side in 0..3 {
                let (a, b) = (t[side], t[next3(side)]);
                let slot = Slot::new(f, side);
                if b == (a + 1) % m {
                    label_slot[base + a] = Some(slot);
                } else if let Some(other) = open.remove(&(b, a)) {
                    diagonal_partner.push((slot, other));
                } else {
                    open.insert((a, b), slot);
                }
            }
        }
        if !open.is_empty() {
            return Err(Error::DegenerateSurface(format!("triangulation of polygon {pi} is inconsistent")));
        }
        base += m;
    }

    let n = faces.len();
    let unset = Slot::new(usize::MAX, 0);
    let mut partner = vec![[unset; 3]; n];
    let mut slot_label = vec![[None; 3]; n];
    for (k, s) in label_slot.iter().enumerate() {
        let s = s.expect("every polygon edge belongs to a triangle");
        let j = pattern.pairing[k];
        let o = label_slot[j].expect("every polygon edge belongs to a triangle");
        partner[s.face][s.side] = o;
        slot_label[s.face][s.side] = Some(k);
    }
    for (a, b) in diagonal_partner {
        partner[a.face][a.side] = b;
        partner[b.face][b.side] = a;
    }

    TranslationSurface {
        faces,
        partner,
        vclass: vec![[0; 3]; n],
        edge_id: vec![[0; 3]; n],
        slot_label,
        label_slot,
        periods: pattern.edge_vectors(),
        face_polygon,
        cones: Vec::new(),
        num_edges: 0,
        area: 0.0,
        tol: *tol,
    }
    .finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn build(name: &str, params: BuiltinParams) -> TranslationSurface {
        build_from_pattern(&builtin(name, &params).unwrap(), &tol()).unwrap()
    }

    #[test]
    fn unit_torus() {
        let s = build("unit-torus", BuiltinParams::default());
        let t = s.topology();
        assert_eq!(t.genus, 1);
        assert!(t.cone_orders.is_empty());
        assert_eq!(s.num_vertex_classes(), 1);
        assert!((s.cone_points()[0].angle - TAU).abs() < 1e-12);
        assert!((s.area() - 1.0).abs() < 1e-15);
        assert_eq!(t.euler_characteristic(), 0);
    }

    #[test]
    fn regular_octagon() {
        let s = build("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() });
        let t = s.topology();
        assert_eq!(t.genus, 2);
        assert_eq!(t.cone_orders, vec![2]);
        assert_eq!(s.num_vertex_classes(), 1);
        assert!((s.cone_points()[0].angle - 6.0 * PI).abs() < 1e-9);
        // Regular polygon area oracle: (1/4) n s² cot(π/n) with n = 8, s = 1.
        let oracle = 0.25 * 8.0 / (PI / 8.0).tan();
        assert!((oracle - 2.0 * (1.0 + SQRT_2)).abs() < 1e-12);
        assert!((s.area() - oracle).abs() < 1e-12);
    }

    #[test]
    fn slit_torus_topology() {
        let s = build("slit-torus", BuiltinParams { lambda: Some(1.0 / SQRT_2), ..Default::default() });
        let t = s.topology();
        assert_eq!(t.genus, 2);
        assert_eq!(t.cone_orders, vec![1, 1]);
        assert!((s.area() - 2.0).abs() < 1e-14);
        for c in s.cone_points() {
            assert!((c.angle - 2.0 * TAU).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_pairing_lengths() {
        let p = PolygonPattern::single(
            vec![Vec2::new(1., 0.), Vec2::new(0.5, 1.), Vec2::new(-1.5, 0.), Vec2::new(0., -1.)],
            vec![2, 3, 0, 1],
        );
        assert!(matches!(build_from_pattern(&p, &tol()), Err(Error::BadPairing(_))));
    }

    #[test]
    fn hexagon_is_a_torus_with_two_marked_points() {
        let s = build("regular-2n-gon", BuiltinParams { n: Some(3), ..Default::default() });
        let t = s.topology();
        assert_eq!(t.genus, 1);
        assert!(t.cone_orders.is_empty());
        assert_eq!(s.num_vertex_classes(), 2);
    }

    #[test]
    fn period_coordinates_reproduce_pattern_edges() {
        for (name, params) in [
            ("unit-torus", BuiltinParams::default()),
            ("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() }),
            ("regular-2n-gon", BuiltinParams { n: Some(5), ..Default::default() }),
            ("slit-torus", BuiltinParams { lambda: Some(0.3), ..Default::default() }),
        ] {
            let p = builtin(name, &params).unwrap();
            let s = build_from_pattern(&p, &tol()).unwrap();
            let all: Vec<usize> = (0..p.num_edges()).collect();
            let got = s.period_coordinates(&all).unwrap();
            for (g, e) in got.iter().zip(p.edge_vectors()) {
                assert!((*g - e).norm() < 1e-14, "{name}: {g:?} vs {e:?}");
            }
        }
    }

    #[test]
    fn torus_period_coordinates() {
        let s = build("unit-torus", BuiltinParams::default());
        assert_eq!(s.period_coordinates(&[0, 1]).unwrap(), vec![Vec2::new(1., 0.), Vec2::new(0., 1.)]);
        assert!(matches!(s.period_coordinates(&[7]), Err(Error::UnknownEdge(7))));
    }

    #[test]
    fn octagon_period_coordinates_match_closed_form() {
        let s = build("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() });
        let got = s.period_coordinates(&[0, 1, 2, 3]).unwrap();
        // Closed-form vertices of the unit-side regular octagon starting at the origin.
        let h = SQRT_2 / 2.0;
        let verts = [
            Vec2::new(0., 0.),
            Vec2::new(1., 0.),
            Vec2::new(1. + h, h),
            Vec2::new(1. + h, 1. + h),
            Vec2::new(1., 1. + 2. * h),
        ];
        for k in 0..4 {
            assert!((got[k] - (verts[k + 1] - verts[k])).norm() < 1e-15);
        }
    }

    #[test]
    fn normalize_rect_torus() {
        let s = build("rect-torus", BuiltinParams { w: Some(2.0), h: Some(1.0), ..Default::default() });
        assert!((s.area() - 2.0).abs() < 1e-15);
        let n = s.normalize_area();
        assert!((n.area() - 1.0).abs() < 1e-12);
        let pc = n.period_coordinates(&[0, 1]).unwrap();
        assert!((pc[0] - Vec2::new(SQRT_2, 0.)).norm() < 1e-15);
        assert!((pc[1] - Vec2::new(0., 1.0 / SQRT_2)).norm() < 1e-15);
        assert_eq!(n.topology(), s.topology());
        let u = build("unit-torus", BuiltinParams::default());
        assert_eq!(u.normalize_area().faces(), u.faces());
    }

    #[test]
    fn cone_angle_sum_matches_polygon_angles() {
        for n in 2..=7 {
            let p = builtin("regular-2n-gon", &BuiltinParams { n: Some(n), ..Default::default() }).unwrap();
            let s = build_from_pattern(&p, &tol()).unwrap();
            let cone_total: f64 = s.cone_points().iter().map(|c| c.angle).sum();
            let t = s.topology();
            let orders: u32 = s.cone_points().iter().map(|c| c.order).sum();
            assert!((cone_total - TAU * (orders + s.num_vertex_classes() as u32) as f64).abs() < 1e-9);
            assert!((cone_total - p.interior_angle_sum()).abs() < 1e-9);
            assert_eq!(t.cone_orders.iter().sum::<u32>() as i64, 2 * t.genus as i64 - 2);
        }
    }

    #[test]
    fn orientation_reversing_transform_keeps_faces_ccw() {
        let s = build("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() });
        let m = GroupElement::new(1.0, 0.3, 0.2, -1.5).unwrap();
        let out = s.transformed(&m).finalize().unwrap();
        assert_eq!(out.topology(), s.topology());
        assert!((out.area() - s.area() * m.det().abs()).abs() < 1e-12);
        let pc = out.period_coordinates(&[0, 1, 2, 3]).unwrap();
        let orig = s.period_coordinates(&[0, 1, 2, 3]).unwrap();
        for (a, b) in pc.iter().zip(orig) {
            assert!((*a - m * b).norm() < 1e-12);
        }
    }
}
