//! The periodic windtree: billiard flow in the plane minus a rectangular
//! lattice of copies of one rectilinear obstacle.
//!
//! The obstacle is a union of centered rectangles with half-extents
//! `(x_k, y_k)`, `x_1 < … < x_m` and `y_1 > … > y_m`: a rectangle for
//! `m = 1`, a symmetric staircase for `m ≥ 2`. Tracing happens in one
//! fundamental cell; an integer offset records which copy of the cell the
//! trajectory is in.

use serde::{Deserialize, Serialize};

use super::PlanarTrajectory;
use crate::error::{Error, Result};
use crate::flow::Termination;
use crate::geometry::{Tolerance, Vec2};

/// Obstacle dimensions. For `m = 1`, `width`/`height` (full sizes) or a
/// single step; for `m ≥ 2`, `steps` as half-extents `[x_k, y_k]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<[f64; 2]>>,
}

/// Serialized scene description: `{ "m": 2, "cell": [[1,0],[0,1]], "obstacle": {...} }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub obstacle: ObstacleSpec,
}

impl SceneSpec {
    pub fn build(&self) -> Result<WindtreeScene> {
        let cell = self.cell.map(|[a, b]| [Vec2::new(a[0], a[1]), Vec2::new(b[0], b[1])]);
        windtree_scene(self.m, cell, &self.obstacle)
    }
}

/// Default full size of the `m = 1` square obstacle.
pub const DEFAULT_RECT_SIZE: f64 = 0.25;
/// Default outer half-extent of the `m ≥ 2` staircase, in unit-cell units.
pub const DEFAULT_STAIRCASE_RADIUS: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Wall {
    vertical: bool,
    /// x of a vertical wall, y of a horizontal one (cell coordinates).
    at: f64,
    lo: f64,
    hi: f64,
    /// Sign of the outward normal along the wall's axis.
    outward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindtreeScene {
    pub m: usize,
    /// Lattice periods; axis-aligned.
    pub cell: [Vec2; 2],
    /// Half-extents `(x_k, y_k)` of the rectangles making up the obstacle.
    pub steps: Vec<(f64, f64)>,
    pub tol: Tolerance,
    walls: Vec<Wall>,
}

fn cell_size(cell: &[Vec2; 2]) -> Result<(f64, f64)> {
    let [p, q] = cell;
    if p.y != 0.0 || q.x != 0.0 || !(p.x > 0.0 && q.y > 0.0) || !(p.x.is_finite() && q.y.is_finite()) {
        return Err(Error::BadDimensions("cell periods must be (a, 0) and (0, b) with a, b > 0".into()));
    }
    Ok((p.x, q.y))
}

/// Build a windtree scene; unspecified dimensions take the documented defaults.
pub fn windtree_scene(m: usize, cell: Option<[Vec2; 2]>, obstacle: &ObstacleSpec) -> Result<WindtreeScene> {
    if m == 0 {
        return Err(Error::BadDimensions("m must be at least 1".into()));
    }
    let cell = cell.unwrap_or([Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
    let (a, b) = cell_size(&cell)?;
    let steps: Vec<(f64, f64)> = match (&obstacle.steps, obstacle.width, obstacle.height) {
        (Some(s), None, None) => s.iter().map(|v| (v[0], v[1])).collect(),
        (None, w, h) if m == 1 => {
            vec![(0.5 * w.unwrap_or(DEFAULT_RECT_SIZE * a), 0.5 * h.unwrap_or(DEFAULT_RECT_SIZE * b))]
        }
        (None, None, None) => {
            let r = DEFAULT_STAIRCASE_RADIUS;
            (1..=m).map(|k| (r * a * k as f64 / m as f64, r * b * (m + 1 - k) as f64 / m as f64)).collect()
        }
        _ => return Err(Error::BadDimensions("give either width/height (m = 1) or steps".into())),
    };
    if steps.len() != m {
        return Err(Error::BadDimensions(format!("expected {m} steps, got {}", steps.len())));
    }
    for (k, &(x, y)) in steps.iter().enumerate() {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::BadDimensions(format!("step {k} has non-positive extent")));
        }
        if k > 0 && !(x > steps[k - 1].0 && y < steps[k - 1].1) {
            return Err(Error::BadDimensions("steps must widen in x and shrink in y".into()));
        }
    }
    let (xm, y1) = (steps[m - 1].0, steps[0].1);
    if !(2.0 * xm < a && 2.0 * y1 < b) {
        return Err(Error::BadDimensions(format!(
            "obstacle {}×{} does not fit strictly inside the {a}×{b} cell",
            2.0 * xm,
            2.0 * y1
        )));
    }
    let tol = Tolerance::default();
    let walls = build_walls(&steps, Vec2::new(0.5 * a, 0.5 * b));
    Ok(WindtreeScene { m, cell, steps, tol, walls })
}

/// A scene with no obstacle at all: free flight on the plane.
pub fn free_scene(cell: Option<[Vec2; 2]>) -> Result<WindtreeScene> {
    let cell = cell.unwrap_or([Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
    cell_size(&cell)?;
    Ok(WindtreeScene { m: 0, cell, steps: Vec::new(), tol: Tolerance::default(), walls: Vec::new() })
}

fn build_walls(steps: &[(f64, f64)], c: Vec2) -> Vec<Wall> {
    let m = steps.len();
    let mut walls = Vec::new();
    for k in 0..m {
        let (x, y) = steps[k];
        // Vertical walls at ±x_k over y ∈ ±[y_{k+1}, y_k] (the full span for the last step).
        let spans: Vec<(f64, f64)> =
            if k + 1 < m { vec![(steps[k + 1].1, y), (-y, -steps[k + 1].1)] } else { vec![(-y, y)] };
        for &(lo, hi) in &spans {
            walls.push(Wall { vertical: true, at: c.x + x, lo: c.y + lo, hi: c.y + hi, outward: 1.0 });
            walls.push(Wall { vertical: true, at: c.x - x, lo: c.y + lo, hi: c.y + hi, outward: -1.0 });
        }
        // Horizontal walls at ±y_k over x ∈ ±[x_{k-1}, x_k] (the full span for the first step).
        let spans: Vec<(f64, f64)> =
            if k > 0 { vec![(steps[k - 1].0, x), (-x, -steps[k - 1].0)] } else { vec![(-x, x)] };
        for &(lo, hi) in &spans {
            walls.push(Wall { vertical: false, at: c.y + y, lo: c.x + lo, hi: c.x + hi, outward: 1.0 });
            walls.push(Wall { vertical: false, at: c.y - y, lo: c.x + lo, hi: c.x + hi, outward: -1.0 });
        }
    }
    walls
}

impl WindtreeScene {
    pub fn cell_size(&self) -> (f64, f64) {
        (self.cell[0].x, self.cell[1].y)
    }

    pub fn center(&self) -> Vec2 {
        let (a, b) = self.cell_size();
        Vec2::new(0.5 * a, 0.5 * b)
    }

    /// Obstacle boundary in cell coordinates, counterclockwise from the
    /// bottom of the right-most wall.
    pub fn boundary(&self) -> Vec<Vec2> {
        let c = self.center();
        let m = self.steps.len();
        if m == 0 {
            return Vec::new();
        }
        // First quadrant, from (x_m, 0) up and left to (0, y_1).
        let mut q1 = Vec::new();
        for k in (0..m).rev() {
            let (x, y) = self.steps[k];
            q1.push(Vec2::new(x, y));
            if k > 0 {
                q1.push(Vec2::new(self.steps[k - 1].0, y));
            }
        }
        let mut out = Vec::new();
        for (sx, sy, rev) in [(1.0, 1.0, false), (-1.0, 1.0, true), (-1.0, -1.0, false), (1.0, -1.0, true)] {
            let mut quad: Vec<Vec2> = q1.iter().map(|p| Vec2::new(sx * p.x, sy * p.y)).collect();
            if rev {
                quad.reverse();
            }
            out.extend(quad);
        }
        out.into_iter().map(|p| p + c).collect()
    }

    /// `(convex, reflex)` corner counts of the obstacle boundary.
    pub fn corner_counts(&self) -> (usize, usize) {
        let b = self.boundary();
        let n = b.len();
        let mut convex = 0;
        let mut reflex = 0;
        for i in 0..n {
            let turn = (b[i] - b[(i + n - 1) % n]).cross(b[(i + 1) % n] - b[i]);
            if turn > 0.0 {
                convex += 1;
            } else if turn < 0.0 {
                reflex += 1;
            }
        }
        (convex, reflex)
    }

    /// Obstacle area per cell.
    pub fn obstacle_area(&self) -> f64 {
        crate::geometry::polygon_area(&self.boundary())
    }

    /// Whether a cell-coordinate point lies in the closed obstacle.
    fn in_obstacle_local(&self, p: Vec2) -> bool {
        let d = p - self.center();
        self.steps.iter().any(|&(x, y)| d.x.abs() <= x && d.y.abs() <= y)
    }

    /// Whether a plane point lies in the closed obstacle of its cell.
    pub fn in_obstacle(&self, p: Vec2) -> bool {
        let (_, local) = self.reduce(p);
        self.in_obstacle_local(local)
    }

    /// Split a plane point into its integer cell offset and cell coordinates.
    pub fn reduce(&self, p: Vec2) -> ((i64, i64), Vec2) {
        let (a, b) = self.cell_size();
        let i = (p.x / a).floor();
        let j = (p.y / b).floor();
        ((i as i64, j as i64), Vec2::new(p.x - i * a, p.y - j * b))
    }

    /// Smallest gap between neighbouring obstacle copies.
    pub fn min_spacing(&self) -> f64 {
        let (a, b) = self.cell_size();
        match (self.steps.last(), self.steps.first()) {
            (Some(&(xm, _)), Some(&(_, y1))) => (a - 2.0 * xm).min(b - 2.0 * y1),
            _ => a.min(b),
        }
    }
}

/// A point where the trajectory changed direction or stopped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindtreeEvent {
    /// Position in the plane.
    pub pos: Vec2,
    pub length: f64,
    /// Wall index for a reflection; `None` at the final point.
    pub wall: Option<usize>,
    pub termination: Option<Termination>,
}

/// Streaming windtree tracer. Yields every reflection and then the final point.
pub struct WindtreeTracer<'a> {
    scene: &'a WindtreeScene,
    a: f64,
    b: f64,
    local: Vec2,
    cell: (i64, i64),
    u: Vec2,
    length: f64,
    budget: f64,
    last_wall: Option<usize>,
    done: bool,
}

impl<'a> WindtreeTracer<'a> {
    pub fn new(scene: &'a WindtreeScene, start: Vec2, angle: f64, budget: f64) -> Result<Self> {
        if !start.is_finite() || !angle.is_finite() {
            return Err(Error::InvalidArgument("start and direction must be finite".into()));
        }
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::InvalidArgument(format!("length budget must be finite and >= 0 (got {budget})")));
        }
        let (cell, local) = scene.reduce(start);
        if scene.in_obstacle_local(local) {
            return Err(Error::StartInsideObstacle);
        }
        let (a, b) = scene.cell_size();
        Ok(WindtreeTracer {
            scene,
            a,
            b,
            local,
            cell,
            u: Vec2::from_angle(angle),
            length: 0.0,
            budget,
            last_wall: None,
            done: false,
        })
    }

    fn plane(&self, local: Vec2) -> Vec2 {
        Vec2::new(self.cell.0 as f64 * self.a + local.x, self.cell.1 as f64 * self.b + local.y)
    }

    pub fn plane_position(&self) -> Vec2 {
        self.plane(self.local)
    }

    pub fn direction(&self) -> Vec2 {
        self.u
    }
}

impl Iterator for WindtreeTracer<'_> {
    type Item = WindtreeEvent;

    fn next(&mut self) -> Option<WindtreeEvent> {
        if self.done {
            return None;
        }
        let eps = self.scene.tol.eps_len;
        loop {
            let p = self.local;
            let u = self.u;
            let tx = if u.x > 0.0 {
                (self.a - p.x) / u.x
            } else if u.x < 0.0 {
                -p.x / u.x
            } else {
                f64::INFINITY
            };
            let ty = if u.y > 0.0 {
                (self.b - p.y) / u.y
            } else if u.y < 0.0 {
                -p.y / u.y
            } else {
                f64::INFINITY
            };
            let mut t_wall = f64::INFINITY;
            let mut hit: Option<(usize, f64)> = None;
            for (k, w) in self.scene.walls.iter().enumerate() {
                if Some(k) == self.last_wall {
                    continue;
                }
                let (du, pu, pv, dv) = if w.vertical { (u.x, p.x, p.y, u.y) } else { (u.y, p.y, p.x, u.x) };
                if du * w.outward >= 0.0 {
                    continue;
                }
                let t = (w.at - pu) / du;
                if !(t > 0.0 && t < t_wall) {
                    continue;
                }
                let s = pv + t * dv;
                if s >= w.lo - eps && s <= w.hi + eps {
                    t_wall = t;
                    hit = Some((k, s));
                }
            }
            let t_cell = tx.min(ty);
            let t_next = t_wall.min(t_cell);
            if self.length + t_next >= self.budget {
                let t = (self.budget - self.length).max(0.0);
                self.local = p + u * t;
                self.length = self.budget;
                self.done = true;
                return Some(WindtreeEvent {
                    pos: self.plane_position(),
                    length: self.length,
                    wall: None,
                    termination: Some(Termination::LengthReached),
                });
            }
            if let Some((k, s)) = hit.filter(|_| t_wall <= t_cell) {
                let w = self.scene.walls[k];
                self.length += t_wall;
                self.local = if w.vertical { Vec2::new(w.at, s) } else { Vec2::new(s, w.at) };
                if (s - w.lo).abs() <= eps || (s - w.hi).abs() <= eps {
                    self.done = true;
                    return Some(WindtreeEvent {
                        pos: self.plane_position(),
                        length: self.length,
                        wall: None,
                        termination: Some(Termination::SingularHit),
                    });
                }
                if w.vertical {
                    self.u.x = -self.u.x;
                } else {
                    self.u.y = -self.u.y;
                }
                self.last_wall = Some(k);
                return Some(WindtreeEvent { pos: self.plane_position(), length: self.length, wall: Some(k), termination: None });
            }
            // Cross into the neighbouring cell.
            self.length += t_cell;
            let mut q = p + u * t_cell;
            if tx <= ty {
                if u.x > 0.0 {
                    q.x = 0.0;
                    self.cell.0 += 1;
                } else {
                    q.x = self.a;
                    self.cell.0 -= 1;
                }
            }
            if ty <= tx {
                if u.y > 0.0 {
                    q.y = 0.0;
                    self.cell.1 += 1;
                } else {
                    q.y = self.b;
                    self.cell.1 -= 1;
                }
            }
            self.local = q;
            self.last_wall = None;
        }
    }
}

/// Trace the windtree billiard from `start` (plane coordinates) for length `budget`.
pub fn windtree_trace(scene: &WindtreeScene, start: Vec2, angle: f64, budget: f64) -> Result<PlanarTrajectory> {
    let tracer = WindtreeTracer::new(scene, start, angle, budget)?;
    let mut out = PlanarTrajectory {
        points: vec![start],
        times: vec![0.0],
        walls: Vec::new(),
        termination: Termination::LengthReached,
        singular_vertex: None,
    };
    for ev in tracer {
        out.points.push(ev.pos);
        out.times.push(ev.length);
        if let Some(w) = ev.wall {
            out.walls.push(w);
        }
        if let Some(t) = ev.termination {
            out.termination = t;
        }
    }
    Ok(out)
}
