//! Grid cells laid over the face charts of a surface.
//!
//! The cells are the intersections of an `n × n` grid over the bounding box
//! of all charts with each face triangle. They depend on the charts, not just
//! on the flat metric; results computed on them are only comparable between
//! surfaces with the same charts.

use crate::geometry::Vec2;
use crate::surface::TranslationSurface;

#[derive(Clone, Debug)]
struct FaceCells {
    ix0: usize,
    iy0: usize,
    nx: usize,
    ny: usize,
    base: usize,
}

/// Cells of an `n × n` chart grid clipped to every face.
#[derive(Clone, Debug)]
pub struct ChartGrid {
    n: usize,
    lo: Vec2,
    step: Vec2,
    faces: Vec<FaceCells>,
    /// Area of each (face, cell) piece.
    areas: Vec<f64>,
    /// (face, ix, iy) of each piece.
    keys: Vec<(usize, usize, usize)>,
    total_area: f64,
}

impl ChartGrid {
    pub fn new(surface: &TranslationSurface, n: usize) -> Self {
        assert!(n > 0, "grid resolution must be positive");
        let (lo, hi) = surface.chart_bounds();
        let step = Vec2::new((hi.x - lo.x) / n as f64, (hi.y - lo.y) / n as f64);
        let mut faces = Vec::with_capacity(surface.num_faces());
        let mut areas = Vec::new();
        let mut keys = Vec::new();
        for (f, tri) in surface.faces().iter().enumerate() {
            let (fx0, fx1) = minmax(tri.iter().map(|p| p.x));
            let (fy0, fy1) = minmax(tri.iter().map(|p| p.y));
            let cell = |v: f64, o: f64, h: f64| (((v - o) / h).floor().max(0.0) as usize).min(n - 1);
            let ix0 = cell(fx0, lo.x, step.x);
            let ix1 = cell(fx1, lo.x, step.x);
            let iy0 = cell(fy0, lo.y, step.y);
            let iy1 = cell(fy1, lo.y, step.y);
            let fc = FaceCells { ix0, iy0, nx: ix1 - ix0 + 1, ny: iy1 - iy0 + 1, base: areas.len() };
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    let rlo = Vec2::new(lo.x + ix as f64 * step.x, lo.y + iy as f64 * step.y);
                    let rhi = rlo + step;
                    areas.push(clipped_area(tri, rlo, rhi));
                    keys.push((f, ix, iy));
                }
            }
            faces.push(fc);
        }
        ChartGrid { n, lo, step, faces, areas, keys, total_area: surface.area() }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    /// Number of (face, cell) pieces, including empty ones.
    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn area(&self, piece: usize) -> f64 {
        self.areas[piece]
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn key(&self, piece: usize) -> (usize, usize, usize) {
        self.keys[piece]
    }

    fn piece_at(&self, face: usize, p: Vec2) -> usize {
        let fc = &self.faces[face];
        let ix = (((p.x - self.lo.x) / self.step.x).floor().max(0.0) as usize).min(self.n - 1);
        let iy = (((p.y - self.lo.y) / self.step.y).floor().max(0.0) as usize).min(self.n - 1);
        let lx = ix.clamp(fc.ix0, fc.ix0 + fc.nx - 1) - fc.ix0;
        let ly = iy.clamp(fc.iy0, fc.iy0 + fc.ny - 1) - fc.iy0;
        fc.base + ly * fc.nx + lx
    }

    /// Calls `visit(piece, length)` for every piece the segment `a → b` of
    /// `face` passes through, with the length of the segment inside it.
    pub fn walk_segment(&self, face: usize, a: Vec2, b: Vec2, mut visit: impl FnMut(usize, f64)) {
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return;
        }
        let mut cuts: Vec<f64> = Vec::new();
        grid_crossings(a.x, d.x, self.lo.x, self.step.x, &mut cuts);
        grid_crossings(a.y, d.y, self.lo.y, self.step.y, &mut cuts);
        cuts.sort_unstable_by(f64::total_cmp);
        let mut t0 = 0.0;
        for t1 in cuts.into_iter().chain(std::iter::once(1.0)) {
            if t1 > t0 {
                let mid = a + d * (0.5 * (t0 + t1));
                visit(self.piece_at(face, mid), (t1 - t0) * len);
                t0 = t1;
            }
        }
    }
}

fn minmax(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Segment parameters in (0, 1) where `start + t·delta` crosses a grid line.
fn grid_crossings(start: f64, delta: f64, origin: f64, h: f64, out: &mut Vec<f64>) {
    if delta == 0.0 || h <= 0.0 {
        return;
    }
    let u0 = (start - origin) / h;
    let u1 = (start + delta - origin) / h;
    let (lo, hi) = if u0 < u1 { (u0, u1) } else { (u1, u0) };
    let mut k = lo.floor() + 1.0;
    while k < hi {
        let t = (k - u0) / (u1 - u0);
        if t > 0.0 && t < 1.0 {
            out.push(t);
        }
        k += 1.0;
    }
}

/// Area of a triangle clipped to an axis-aligned rectangle.
fn clipped_area(tri: &[Vec2; 3], lo: Vec2, hi: Vec2) -> f64 {
    let mut poly: Vec<Vec2> = tri.to_vec();
    // (axis, bound, keep_greater)
    for (axis, bound, keep_ge) in [(0, lo.x, true), (0, hi.x, false), (1, lo.y, true), (1, hi.y, false)] {
        if poly.is_empty() {
            break;
        }
        let coord = |p: &Vec2| if axis == 0 { p.x } else { p.y };
        let inside = |p: &Vec2| if keep_ge { coord(p) >= bound } else { coord(p) <= bound };
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let cur = poly[i];
            let nxt = poly[(i + 1) % poly.len()];
            let (ci, ni) = (inside(&cur), inside(&nxt));
            if ci {
                out.push(cur);
            }
            if ci != ni {
                let t = (bound - coord(&cur)) / (coord(&nxt) - coord(&cur));
                out.push(cur.lerp(nxt, t));
            }
        }
        poly = out;
    }
    if poly.len() < 3 {
        0.0
    } else {
        crate::geometry::polygon_area(&poly).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_from_pattern, builtin, BuiltinParams};
    use crate::Tolerance;

    #[test]
    fn piece_areas_sum_to_surface_area() {
        for (name, p) in [
            ("unit-torus", BuiltinParams::default()),
            ("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() }),
            ("slit-torus", BuiltinParams { lambda: Some(0.37), ..Default::default() }),
        ] {
            let s = build_from_pattern(&builtin(name, &p).unwrap(), &Tolerance::default()).unwrap();
            for n in [1, 7, 10, 33] {
                let g = ChartGrid::new(&s, n);
                let total: f64 = (0..g.len()).map(|i| g.area(i)).sum();
                assert!((total - s.area()).abs() < 1e-12, "{name} n={n}: {total}");
            }
        }
    }

    #[test]
    fn walk_lengths_sum_to_segment_length() {
        let s = build_from_pattern(&builtin("unit-torus", &BuiltinParams::default()).unwrap(), &Tolerance::default())
            .unwrap();
        let g = ChartGrid::new(&s, 10);
        let (a, b) = (Vec2::new(0.91, 0.03), Vec2::new(0.98, 0.6));
        let mut total = 0.0;
        let mut pieces = 0;
        g.walk_segment(0, a, b, |_, l| {
            total += l;
            pieces += 1;
        });
        assert!((total - a.dist(b)).abs() < 1e-15);
        assert_eq!(pieces, 6);
    }
}
