//! Straight-line flow on translation surfaces.
//!
//! A [`Tracer`] walks a geodesic from face to face. Because every chart
//! transition is a translation, the direction never changes; only the face
//! and the chart position do. Regular (angle 2π) marked points are passed
//! straight through; true cone points end the trace with
//! [`Termination::SingularHit`].

use serde::{Deserialize, Serialize};

use crate::chart_grid::ChartGrid;
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Vec2};
use crate::surface::{next3, prev3, Slot, SurfacePoint, TranslationSurface};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    LengthReached,
    CrossingsReached,
    SingularHit,
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Limit {
    Length(f64),
    Crossings(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Stop at regular marked points too, not only at true cone points.
    pub stop_at_marked: bool,
    /// Stop with [`Termination::Closed`] when the orbit returns to its start.
    pub detect_closure: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { stop_at_marked: false, detect_closure: true }
    }
}

/// What happened at the end of a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crossing {
    /// Crossed the glued edge with this id.
    Edge(usize),
    /// Passed straight through a regular vertex of this class.
    Vertex(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub face: usize,
    pub entry: Vec2,
    pub exit: Vec2,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.entry.dist(self.exit)
    }
}

/// A crossing between consecutive segments and the chart translation that
/// takes the exit point of the earlier segment to the entry of the next.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub crossing: Crossing,
    pub slot: Option<Slot>,
    pub offset: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: SurfacePoint,
    pub direction: f64,
    pub segments: Vec<Segment>,
    /// `crossings[k]` sits between `segments[k]` and `segments[k + 1]`.
    pub crossings: Vec<CrossingRecord>,
    pub total_length: f64,
    pub termination: Termination,
    /// Vertex class hit when `termination` is `SingularHit`.
    pub singular_class: Option<usize>,
}

impl Trajectory {
    pub fn crossing_word(&self) -> Vec<Crossing> {
        self.crossings.iter().map(|c| c.crossing).collect()
    }

    pub fn end(&self) -> SurfacePoint {
        let s = self.segments.last().expect("trajectory has at least one segment");
        SurfacePoint::new(s.face, s.exit)
    }

    /// Sum of the segment vectors: the displacement in the developing map.
    pub fn developed_displacement(&self) -> Vec2 {
        self.segments.iter().fold(Vec2::ZERO, |acc, s| acc + (s.exit - s.entry))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Mode {
    Interior,
    OnEdge(usize),
    AtVertex(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Exit {
    Side(usize),
    Corner(usize),
}

/// One step of a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub segment: Segment,
    /// Cumulative length at the end of the segment.
    pub length: f64,
    /// Crossing made after the segment, if the trace continues.
    pub crossing: Option<CrossingRecord>,
    /// Set on the final step.
    pub termination: Option<Termination>,
    pub singular_class: Option<usize>,
}

/// Incremental geodesic tracer; yields one [`Step`] per face visited.
pub struct Tracer<'a> {
    surf: &'a TranslationSurface,
    dir: Vec2,
    face: usize,
    pos: Vec2,
    mode: Mode,
    length: f64,
    crossings: usize,
    limit: Limit,
    opts: TraceOptions,
    start_reps: Vec<SurfacePoint>,
    done: bool,
}

impl<'a> Tracer<'a> {
    pub fn new(
        surf: &'a TranslationSurface,
        start: SurfacePoint,
        direction: Vec2,
        limit: Limit,
        opts: TraceOptions,
    ) -> Result<Self> {
        if start.face >= surf.num_faces() || !surf.contains(start.face, start.pos) {
            return Err(Error::StartOutsideFace { face: start.face });
        }
        if !(direction.is_finite() && direction.norm() > 0.0) {
            return Err(Error::InvalidArgument("direction must be a nonzero finite vector".into()));
        }
        if surf.distance_to_vertex(&start) <= surf.tolerance().eps_len {
            return Err(Error::StartOnVertex);
        }
        match limit {
            Limit::Length(l) if !(l >= 0.0 && l.is_finite()) => {
                return Err(Error::InvalidArgument(format!("length limit must be finite and >= 0 (got {l})")))
            }
            _ => {}
        }
        let eps = surf.tolerance().eps_len;
        let mut start_reps = vec![start];
        let v = surf.face(start.face);
        for i in 0..3 {
            if point_segment_distance(start.pos, v[i], v[next3(i)]) <= eps {
                let s = Slot::new(start.face, i);
                start_reps.push(SurfacePoint::new(surf.partner(s).face, start.pos + surf.offset(s)));
            }
        }
        Ok(Tracer {
            surf,
            dir: direction.normalized(),
            face: start.face,
            pos: start.pos,
            mode: Mode::Interior,
            length: 0.0,
            crossings: 0,
            limit,
            opts,
            start_reps,
            done: false,
        })
    }

    pub fn direction(&self) -> Vec2 {
        self.dir
    }

    /// Parameter along the ray and the exit feature from the current state.
    fn find_exit(&self) -> Option<(f64, Exit)> {
        let v = self.surf.face(self.face);
        let p = self.pos;
        let u = self.dir;
        let eps = self.surf.tolerance().eps_len;
        let eps_a = self.surf.tolerance().eps_angle;
        let (t, side) = match self.mode {
            Mode::Interior => {
                let mut best: Option<(f64, usize)> = None;
                for i in 0..3 {
                    let e = v[next3(i)] - v[i];
                    let den = u.cross(e);
                    if den <= eps_a * e.norm() {
                        continue;
                    }
                    let t = ((v[i] - p).cross(e) / den).max(0.0);
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, i));
                    }
                }
                best?
            }
            Mode::OnEdge(j) => {
                let c_idx = prev3(j);
                let c = v[c_idx];
                let o = u.cross(c - p);
                if o.abs() <= eps && (c - p).dot(u) > 0.0 {
                    return Some(((c - p).dot(u), Exit::Corner(c_idx)));
                }
                let side = if o > 0.0 { next3(j) } else { c_idx };
                let e = v[next3(side)] - v[side];
                let den = u.cross(e);
                if den <= 0.0 {
                    // Ray grazes along the entry edge; leave through the far corner.
                    let corner = if o > 0.0 { next3(j) } else { j };
                    return Some(((v[corner] - p).dot(u).max(0.0), Exit::Corner(corner)));
                }
                (((v[side] - p).cross(e) / den).max(0.0), side)
            }
            Mode::AtVertex(k) => {
                let side = next3(k);
                let e = v[next3(side)] - v[side];
                let den = u.cross(e);
                if den <= 0.0 {
                    return None;
                }
                (((v[side] - p).cross(e) / den).max(0.0), side)
            }
        };
        let q = p + u * t;
        let (a, b) = (side, next3(side));
        if q.dist(v[a]) <= eps {
            return Some(((v[a] - p).dot(u).max(t), Exit::Corner(a)));
        }
        if q.dist(v[b]) <= eps {
            return Some(((v[b] - p).dot(u).max(t), Exit::Corner(b)));
        }
        Some((t, Exit::Side(side)))
    }

    /// Corner around the vertex of `(f, i)` whose sector contains the direction.
    fn outgoing_corner(&self, f: usize, i: usize) -> Option<(usize, usize)> {
        let eps_a = self.surf.tolerance().eps_angle;
        let (mut g, mut k) = (f, i);
        for _ in 0..3 * self.surf.num_faces() {
            let v = self.surf.face(g);
            let d1 = (v[next3(k)] - v[k]).normalized();
            let mut phi = d1.cross(self.dir).atan2(d1.dot(self.dir));
            if phi < 0.0 {
                phi += std::f64::consts::TAU;
            }
            if phi > std::f64::consts::TAU - eps_a {
                phi = 0.0;
            }
            if phi <= self.surf.corner_angle(g, k) + eps_a {
                return Some((g, k));
            }
            (g, k) = self.surf.ccw_corner(g, k);
        }
        None
    }

    /// Distance along the current ray to a representation of the start point
    /// lying on the segment `[pos, pos + t·dir]`, if any.
    fn closure_at(&self, t: f64) -> Option<f64> {
        let eps = self.surf.tolerance().eps_len;
        let q = self.pos + self.dir * t;
        self.start_reps.iter().filter(|r| r.face == self.face).find_map(|r| {
            let along = (r.pos - self.pos).dot(self.dir);
            if along > eps && along <= t + eps && point_segment_distance(r.pos, self.pos, q) <= eps {
                Some(along.min(t))
            } else {
                None
            }
        })
    }

    fn finish(&mut self, seg: Segment, termination: Termination, class: Option<usize>) -> Step {
        self.done = true;
        Step { segment: seg, length: self.length, crossing: None, termination: Some(termination), singular_class: class }
    }
}

impl Iterator for Tracer<'_> {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        if self.done {
            return None;
        }
        let surf = self.surf;
        let (mut t, exit) = match self.find_exit() {
            Some(x) => x,
            None => {
                // Numerically lost (e.g. grazing a degenerate corner): stop here.
                let seg = Segment { face: self.face, entry: self.pos, exit: self.pos };
                return Some(self.finish(seg, Termination::SingularHit, None));
            }
        };
        if self.mode == Mode::Interior && t == 0.0 {
            // Sitting on an edge and heading out of this face: switch faces.
            if let Exit::Side(s) = exit {
                let slot = Slot::new(self.face, s);
                let other = surf.partner(slot);
                self.pos += surf.offset(slot);
                self.face = other.face;
                self.mode = Mode::OnEdge(other.side);
                return self.next();
            }
        }
        let entry = self.pos;

        // The direction is global, so passing the start point again closes the orbit.
        if self.opts.detect_closure {
            if let Some(d) = self.closure_at(t) {
                self.length += d;
                let seg = Segment { face: self.face, entry, exit: entry + self.dir * d };
                return Some(self.finish(seg, Termination::Closed, None));
            }
        }

        if let Limit::Length(max) = self.limit {
            if self.length + t >= max {
                t = (max - self.length).max(0.0);
                self.length = max;
                let seg = Segment { face: self.face, entry, exit: entry + self.dir * t };
                return Some(self.finish(seg, Termination::LengthReached, None));
            }
        }
        self.length += t;

        let v = surf.face(self.face);
        match exit {
            Exit::Corner(c) => {
                let seg = Segment { face: self.face, entry, exit: v[c] };
                let class = surf.vertex_class(self.face, c);
                if self.opts.stop_at_marked || !surf.is_regular_class(class) {
                    return Some(self.finish(seg, Termination::SingularHit, Some(class)));
                }
                let Some((g, k)) = self.outgoing_corner(self.face, c) else {
                    return Some(self.finish(seg, Termination::SingularHit, Some(class)));
                };
                let new_pos = surf.face(g)[k];
                let rec = CrossingRecord { crossing: Crossing::Vertex(class), slot: None, offset: new_pos - v[c] };
                self.face = g;
                self.pos = new_pos;
                self.mode = Mode::AtVertex(k);
                Some(self.after_crossing(seg, rec))
            }
            Exit::Side(s) => {
                let a = v[s];
                let b = v[next3(s)];
                let e = b - a;
                // Snap the exit point onto the edge.
                let raw = entry + self.dir * t;
                let sp = ((raw - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
                let q = a + e * sp;
                let seg = Segment { face: self.face, entry, exit: q };
                let slot = Slot::new(self.face, s);
                let other = surf.partner(slot);
                let offset = surf.offset(slot);
                let rec = CrossingRecord { crossing: Crossing::Edge(surf.edge_id(slot)), slot: Some(slot), offset };
                self.face = other.face;
                self.pos = q + offset;
                self.mode = Mode::OnEdge(other.side);
                Some(self.after_crossing(seg, rec))
            }
        }
    }
}

impl Tracer<'_> {
    fn after_crossing(&mut self, seg: Segment, rec: CrossingRecord) -> Step {
        self.crossings += 1;
        if let Limit::Crossings(n) = self.limit {
            if self.crossings >= n {
                return self.finish(seg, Termination::CrossingsReached, None);
            }
        }
        Step { segment: seg, length: self.length, crossing: Some(rec), termination: None, singular_class: None }
    }
}

/// Trace the straight line from `start` in direction `angle` (radians from +x).
pub fn trace(surface: &TranslationSurface, start: SurfacePoint, angle: f64, limit: Limit) -> Result<Trajectory> {
    trace_with(surface, start, angle, limit, TraceOptions::default())
}

pub fn trace_with(
    surface: &TranslationSurface,
    start: SurfacePoint,
    angle: f64,
    limit: Limit,
    opts: TraceOptions,
) -> Result<Trajectory> {
    let tracer = Tracer::new(surface, start, Vec2::from_angle(angle), limit, opts)?;
    let mut segments = Vec::new();
    let mut crossings = Vec::new();
    let mut termination = Termination::LengthReached;
    let mut singular_class = None;
    let mut total = 0.0;
    for step in tracer {
        segments.push(step.segment);
        total = step.length;
        if let Some(c) = step.crossing {
            crossings.push(c);
        }
        if let Some(t) = step.termination {
            termination = t;
            singular_class = step.singular_class;
        }
    }
    Ok(Trajectory { start, direction: angle, segments, crossings, total_length: total, termination, singular_class })
}

/// Period length and crossing word of the orbit, if it closes within the budget.
pub fn detect_periodic(
    surface: &TranslationSurface,
    start: SurfacePoint,
    angle: f64,
    max_crossings: usize,
) -> Result<Option<(f64, Vec<Crossing>)>> {
    let tr = trace(surface, start, angle, Limit::Crossings(max_crossings))?;
    Ok((tr.termination == Termination::Closed).then(|| (tr.total_length, tr.crossing_word())))
}

/// Visit-length distribution of a trajectory over chart grid cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub grid_n: usize,
    /// (face, ix, iy) of each cell piece.
    pub cells: Vec<(usize, usize, usize)>,
    /// Fraction of trajectory length spent in each cell piece.
    pub visit_fractions: Vec<f64>,
    /// Area fraction of each cell piece.
    pub area_fractions: Vec<f64>,
    /// Largest deviation between visit and area measure over unions of
    /// cells (half the ℓ¹ distance).
    pub discrepancy: f64,
    /// Largest single-cell deviation.
    pub max_cell_deviation: f64,
}

/// Accumulates trajectory length per chart-grid cell.
pub struct VisitAccumulator<'g> {
    grid: &'g ChartGrid,
    visits: Vec<f64>,
    total: f64,
}

impl<'g> VisitAccumulator<'g> {
    pub fn new(grid: &'g ChartGrid) -> Self {
        VisitAccumulator { grid, visits: vec![0.0; grid.len()], total: 0.0 }
    }

    pub fn add(&mut self, seg: &Segment) {
        let visits = &mut self.visits;
        let mut added = 0.0;
        self.grid.walk_segment(seg.face, seg.entry, seg.exit, |p, l| {
            visits[p] += l;
            added += l;
        });
        self.total += added;
    }

    pub fn total_length(&self) -> f64 {
        self.total
    }

    pub fn discrepancy(&self) -> f64 {
        let area = self.grid.total_area();
        0.5 * self
            .visits
            .iter()
            .enumerate()
            .map(|(i, &v)| (v / self.total - self.grid.area(i) / area).abs())
            .sum::<f64>()
    }

    pub fn report(&self) -> DiscrepancyReport {
        let area = self.grid.total_area();
        let visit_fractions: Vec<f64> = self.visits.iter().map(|v| v / self.total).collect();
        let area_fractions: Vec<f64> = (0..self.grid.len()).map(|i| self.grid.area(i) / area).collect();
        let max_cell_deviation =
            visit_fractions.iter().zip(&area_fractions).map(|(v, a)| (v - a).abs()).fold(0.0, f64::max);
        DiscrepancyReport {
            grid_n: self.grid.resolution(),
            cells: (0..self.grid.len()).map(|i| self.grid.key(i)).collect(),
            discrepancy: self.discrepancy(),
            visit_fractions,
            area_fractions,
            max_cell_deviation,
        }
    }
}

pub fn discrepancy(trajectory: &Trajectory, surface: &TranslationSurface, grid_n: usize) -> Result<DiscrepancyReport> {
    if !(trajectory.total_length > 0.0) {
        return Err(Error::InvalidArgument("trajectory has zero length".into()));
    }
    if grid_n == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let grid = ChartGrid::new(surface, grid_n);
    let mut acc = VisitAccumulator::new(&grid);
    for s in &trajectory.segments {
        acc.add(s);
    }
    Ok(acc.report())
}

/// One sample of a first-return map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    /// Transversal parameter of the starting point.
    pub input: f64,
    /// Transversal parameter at first return; `None` when the orbit hit a
    /// cone point first.
    pub output: Option<f64>,
    /// Flow length until the return.
    pub return_length: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
struct TransversalPiece {
    face: usize,
    a: Vec2,
    b: Vec2,
    s0: f64,
    s1: f64,
}

/// Numerical first-return map of the flow in `direction` to a transversal
/// segment starting at `base` with vector `seg`. Samples sit at the midpoints
/// of `n` equal sub-intervals.
pub fn first_return(
    surface: &TranslationSurface,
    base: SurfacePoint,
    seg: Vec2,
    direction: Vec2,
    n: usize,
    max_crossings: usize,
) -> Result<Vec<ReturnSample>> {
    let len = seg.norm();
    let u = direction.normalized();
    if n == 0 || len <= surface.tolerance().eps_len {
        return Err(Error::InvalidArgument("need a nonempty transversal and at least one sample".into()));
    }
    if u.cross(seg).abs() <= surface.tolerance().eps_angle * len {
        return Err(Error::InvalidArgument("transversal is parallel to the flow direction".into()));
    }
    let opts = TraceOptions { stop_at_marked: false, detect_closure: false };
    let mut pieces = Vec::new();
    for step in Tracer::new(surface, base, seg, Limit::Length(len), opts)? {
        let sg = step.segment;
        let l = sg.length();
        let s1 = step.length / len;
        pieces.push(TransversalPiece { face: sg.face, a: sg.entry, b: sg.exit, s0: s1 - l / len, s1 });
        if step.termination == Some(Termination::SingularHit) {
            return Err(Error::InvalidArgument("transversal runs into a cone point".into()));
        }
    }
    let eps = surface.tolerance().eps_len;

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let s = (k as f64 + 0.5) / n as f64;
        let piece = pieces
            .iter()
            .find(|p| s >= p.s0 && s <= p.s1 && p.s1 > p.s0)
            .or(pieces.last())
            .expect("transversal has at least one piece");
        let pos = piece.a.lerp(piece.b, (s - piece.s0) / (piece.s1 - piece.s0));
        let start = SurfacePoint::new(piece.face, pos);
        let mut result = None;
        let mut singular = false;
        for step in Tracer::new(surface, start, u, Limit::Crossings(max_crossings), opts)? {
            let sg = step.segment;
            let before = step.length - sg.length();
            let hit = pieces.iter().filter(|p| p.face == sg.face).find_map(|p| {
                let (t, sp) = segment_hit(sg.entry, sg.exit, p.a, p.b, eps)?;
                let along = before + t * sg.length();
                (along > eps).then_some((along, p.s0 + sp * (p.s1 - p.s0)))
            });
            if let Some((along, param)) = hit {
                result = Some((along, param.clamp(0.0, 1.0)));
                break;
            }
            if step.termination == Some(Termination::SingularHit) {
                singular = true;
                break;
            }
        }
        match result {
            Some((l, param)) => out.push(ReturnSample { input: s, output: Some(param), return_length: Some(l) }),
            None if singular => out.push(ReturnSample { input: s, output: None, return_length: None }),
            None => return Err(Error::NoReturn { budget: max_crossings }),
        }
    }
    Ok(out)
}

/// Intersection parameters `(t, s)` of segments `p→q` and `a→b`, endpoints included.
fn segment_hit(p: Vec2, q: Vec2, a: Vec2, b: Vec2, eps: f64) -> Option<(f64, f64)> {
    let d = q - p;
    let e = b - a;
    let den = d.cross(e);
    if den.abs() <= f64::EPSILON * d.norm() * e.norm() {
        return None;
    }
    let w = a - p;
    let t = w.cross(e) / den;
    let s = w.cross(d) / den;
    let tt = eps / d.norm().max(eps);
    let ts = eps / e.norm().max(eps);
    if t < -tt || t > 1.0 + tt || s < -ts || s > 1.0 + ts {
        return None;
    }
    Some((t.clamp(0.0, 1.0), s.clamp(0.0, 1.0)))
}
