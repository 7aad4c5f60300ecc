//! Polygon patterns: planar polygons whose sides are paired by translations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orient, polygon_area, segments_intersect, Tolerance, Vec2};

/// One polygon of a pattern, given by its counterclockwise edge vectors
/// starting at `origin` (the position of its first vertex in the chart).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternPolygon {
    #[serde(default)]
    pub origin: Vec2,
    pub edges: Vec<Vec2>,
}

impl PatternPolygon {
    pub fn new(origin: Vec2, edges: Vec<Vec2>) -> Self {
        Self { origin, edges }
    }

    /// Vertex positions `origin, origin + e0, origin + e0 + e1, …` (one per edge).
    pub fn vertices(&self) -> Vec<Vec2> {
        let mut out = Vec::with_capacity(self.edges.len());
        let mut p = self.origin;
        for e in &self.edges {
            out.push(p);
            p += *e;
        }
        out
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices())
    }
}

/// A collection of polygons with a side-pairing involution.
///
/// Edges are numbered globally: the edges of polygon 0 first, then polygon 1,
/// and so on. `pairing[k]` is the partner of edge `k`. Paired edges must be
/// parallel, of equal length and traversed in opposite directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonPattern {
    pub polygons: Vec<PatternPolygon>,
    pub pairing: Vec<usize>,
}

impl PolygonPattern {
    /// Single-polygon pattern with its first vertex at the origin.
    pub fn single(edges: Vec<Vec2>, pairing: Vec<usize>) -> Self {
        Self { polygons: vec![PatternPolygon::new(Vec2::ZERO, edges)], pairing }
    }

    pub fn num_edges(&self) -> usize {
        self.polygons.iter().map(|p| p.edges.len()).sum()
    }

    /// Edge vector for a global edge index.
    pub fn edge(&self, k: usize) -> Option<Vec2> {
        let (p, e) = self.locate_edge(k)?;
        Some(self.polygons[p].edges[e])
    }

    /// All edge vectors in global order.
    pub fn edge_vectors(&self) -> Vec<Vec2> {
        self.polygons.iter().flat_map(|p| p.edges.iter().copied()).collect()
    }

    /// (polygon, local edge) for a global edge index.
    pub fn locate_edge(&self, mut k: usize) -> Option<(usize, usize)> {
        for (pi, p) in self.polygons.iter().enumerate() {
            if k < p.edges.len() {
                return Some((pi, k));
            }
            k -= p.edges.len();
        }
        None
    }

    /// Sum of the interior angles of every polygon (radians).
    pub fn interior_angle_sum(&self) -> f64 {
        self.polygons
            .iter()
            .map(|p| {
                let n = p.edges.len();
                (0..n)
                    .map(|i| {
                        let incoming = p.edges[(i + n - 1) % n];
                        let outgoing = p.edges[i];
                        // interior angle = π − turning angle
                        std::f64::consts::PI - incoming.cross(outgoing).atan2(incoming.dot(outgoing))
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Checks closure, orientation, simplicity and the pairing.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        if self.polygons.is_empty() {
            return Err(Error::DegenerateSurface("pattern has no polygons".into()));
        }
        for (pi, poly) in self.polygons.iter().enumerate() {
            if poly.edges.len() < 3 {
                return Err(Error::NotSimplePolygon {
                    polygon: pi,
                    reason: format!("{} edges (need at least 3)", poly.edges.len()),
                });
            }
            if poly.edges.iter().any(|e| !e.is_finite()) || !poly.origin.is_finite() {
                return Err(Error::InvalidArgument("non-finite coordinate in pattern".into()));
            }
            let sum = poly.edges.iter().fold(Vec2::ZERO, |a, &e| a + e);
            let scale: f64 = poly.edges.iter().map(|e| e.norm()).sum();
            if sum.norm() > tol.eps_len * scale.max(1.0) {
                return Err(Error::NotClosed { x: sum.x, y: sum.y });
            }
            if let Some(i) = poly.edges.iter().position(|e| e.norm() <= tol.eps_len) {
                return Err(Error::DegenerateSurface(format!("edge {i} of polygon {pi} has zero length")));
            }
            check_simple(pi, &poly.vertices(), tol)?;
            if poly.area() <= 0.0 {
                return Err(Error::NotSimplePolygon { polygon: pi, reason: "clockwise orientation".into() });
            }
        }

        let n = self.num_edges();
        if self.pairing.len() != n {
            return Err(Error::BadPairing(format!("pairing has {} entries for {n} edges", self.pairing.len())));
        }
        let edges = self.edge_vectors();
        for (k, &j) in self.pairing.iter().enumerate() {
            if j >= n {
                return Err(Error::BadPairing(format!("edge {k} paired with nonexistent edge {j}")));
            }
            if j == k {
                return Err(Error::BadPairing(format!("edge {k} is paired with itself")));
            }
            if self.pairing[j] != k {
                return Err(Error::BadPairing(format!("pairing is not an involution at edge {k}")));
            }
            let mismatch = (edges[k] + edges[j]).norm();
            if mismatch > tol.eps_len * edges[k].norm().max(1.0) {
                return Err(Error::BadPairing(format!(
                    "edges {k} and {j} are not opposite translates (|v{k} + v{j}| = {mismatch:e})"
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_simple(pi: usize, verts: &[Vec2], tol: &Tolerance) -> Result<()> {
    let n = verts.len();
    let seg = |i: usize| (verts[i], verts[(i + 1) % n]);
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a0, a1) = seg(i);
            let (b0, b1) = seg(j);
            if adjacent {
                // Consecutive edges may only share their common vertex: reject fold-backs.
                let (shared, p, q) = if j == i + 1 { (a1, a0, b1) } else { (a0, a1, b0) };
                let u = p - shared;
                let v = q - shared;
                if orient(shared, p, q, tol) == 0 && u.dot(v) > 0.0 {
                    return Err(Error::NotSimplePolygon {
                        polygon: pi,
                        reason: format!("edges {i} and {j} overlap"),
                    });
                }
                continue;
            }
            if segments_intersect(a0, a1, b0, b1, tol) {
                return Err(Error::NotSimplePolygon {
                    polygon: pi,
                    reason: format!("edges {i} and {j} intersect"),
                });
            }
        }
    }
    Ok(())
}

/// Ear-clipping triangulation of a simple counterclockwise polygon.
///
/// Returns triangles as vertex-index triples, each counterclockwise.
/// Vertices with a straight angle are kept but never used as ear tips.
pub fn ear_clip(verts: &[Vec2], tol: &Tolerance) -> Result<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..verts.len()).collect();
    let mut tris = Vec::with_capacity(verts.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ip, ic, inx) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (verts[ip], verts[ic], verts[inx]);
            if orient(a, b, c, tol) <= 0 {
                continue;
            }
            let blocked = idx.iter().any(|&o| {
                if o == ip || o == ic || o == inx {
                    return false;
                }
                let p = verts[o];
                orient(a, b, p, tol) >= 0 && orient(b, c, p, tol) >= 0 && orient(c, a, p, tol) >= 0
            });
            if blocked {
                continue;
            }
            tris.push([ip, ic, inx]);
            idx.remove(k);
            clipped = true;
            break;
        }
        if !clipped {
            return Err(Error::DegenerateSurface("ear clipping found no ear".into()));
        }
    }
    let (a, b, c) = (verts[idx[0]], verts[idx[1]], verts[idx[2]]);
    if orient(a, b, c, tol) <= 0 {
        return Err(Error::DegenerateSurface("zero-area triangle left after ear clipping".into()));
    }
    tris.push([idx[0], idx[1], idx[2]]);
    Ok(tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PolygonPattern {
        PolygonPattern::single(
            vec![Vec2::new(1., 0.), Vec2::new(0., 1.), Vec2::new(-1., 0.), Vec2::new(0., -1.)],
            vec![2, 3, 0, 1],
        )
    }

    #[test]
    fn square_is_valid() {
        square().validate(&Tolerance::default()).unwrap();
    }

    #[test]
    fn open_polygon_rejected() {
        let mut p = square();
        p.polygons[0].edges[0] = Vec2::new(1.1, 0.);
        assert!(matches!(p.validate(&Tolerance::default()), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn bowtie_rejected() {
        let p = PolygonPattern::single(
            vec![Vec2::new(1., 1.), Vec2::new(0., -1.), Vec2::new(-1., 1.), Vec2::new(0., -1.)],
            vec![2, 3, 0, 1],
        );
        assert!(matches!(p.validate(&Tolerance::default()), Err(Error::NotSimplePolygon { .. })));
    }

    #[test]
    fn pairing_errors() {
        let t = Tolerance::default();
        let mut p = square();
        p.pairing = vec![1, 0, 3, 2];
        assert!(matches!(p.validate(&t), Err(Error::BadPairing(_))));
        p.pairing = vec![0, 3, 2, 1];
        assert!(matches!(p.validate(&t), Err(Error::BadPairing(_))));
        p.pairing = vec![2, 3, 1, 1];
        assert!(matches!(p.validate(&t), Err(Error::BadPairing(_))));
    }

    #[test]
    fn ear_clip_handles_straight_vertices() {
        let verts = [
            Vec2::new(0., 0.),
            Vec2::new(0.3, 0.),
            Vec2::new(1., 0.),
            Vec2::new(1., 1.),
            Vec2::new(0.3, 1.),
            Vec2::new(0., 1.),
        ];
        let tris = ear_clip(&verts, &Tolerance::default()).unwrap();
        assert_eq!(tris.len(), 4);
        let area: f64 = tris
            .iter()
            .map(|t| crate::geometry::signed_area2(verts[t[0]], verts[t[1]], verts[t[2]]) * 0.5)
            .sum();
        assert!((area - 1.0).abs() < 1e-15);
        assert!(tris
            .iter()
            .all(|t| crate::geometry::signed_area2(verts[t[0]], verts[t[1]], verts[t[2]]) > 0.0));
    }

    #[test]
    fn octagon_angle_sum() {
        let edges: Vec<Vec2> = (0..8).map(|k| Vec2::from_angle(k as f64 * std::f64::consts::FRAC_PI_4)).collect();
        let p = PolygonPattern::single(edges, (0..8).map(|k| (k + 4) % 8).collect());
        assert!((p.interior_angle_sum() - 6.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
