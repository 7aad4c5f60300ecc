//! Experiment harness: diffusion exponents, estimator baselines, the
//! theoretical windtree rate, illumination coverage and equidistribution.
//!
//! All randomness comes from ChaCha8 streams derived from one seed: trial
//! `k` uses stream `k` of the generator seeded with `seed`, so results do not
//! depend on the number of worker threads.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::billiards::{WindtreeScene, WindtreeTracer};
use crate::chart_grid::ChartGrid;
use crate::error::{Error, Result};
use crate::flow::{Limit, Termination, TraceOptions, Tracer, VisitAccumulator};
use crate::geometry::Vec2;
use crate::moduli::linear_slope;
use crate::surface::{SurfacePoint, TranslationSurface};

/// Projection directions used to estimate the diameter of a point set. The
/// estimate is within a factor `cos(π/(2·DIAMETER_DIRECTIONS))` of the truth.
pub const DIAMETER_DIRECTIONS: usize = 16;

/// Attempts per direction before giving up on corner hits.
pub const MAX_RESAMPLES: usize = 64;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Dyadic checkpoints `t_max / 2^k ≥ 1`, increasing.
pub fn dyadic_checkpoints(t_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = t_max;
    while t >= 1.0 {
        out.push(t);
        t *= 0.5;
    }
    out.reverse();
    out
}

/// Running diameter of a polyline, recorded at fixed times.
#[derive(Clone, Debug)]
pub struct DiameterTracker {
    dirs: [Vec2; DIAMETER_DIRECTIONS],
    lo: [f64; DIAMETER_DIRECTIONS],
    hi: [f64; DIAMETER_DIRECTIONS],
    checkpoints: Vec<f64>,
    recorded: Vec<f64>,
    last: Option<(Vec2, f64)>,
}

impl DiameterTracker {
    pub fn new(checkpoints: Vec<f64>) -> Self {
        let dirs = std::array::from_fn(|k| Vec2::from_angle(std::f64::consts::PI * k as f64 / DIAMETER_DIRECTIONS as f64));
        DiameterTracker {
            dirs,
            lo: [f64::INFINITY; DIAMETER_DIRECTIONS],
            hi: [f64::NEG_INFINITY; DIAMETER_DIRECTIONS],
            checkpoints,
            recorded: Vec::new(),
            last: None,
        }
    }

    fn include(&mut self, p: Vec2) {
        for k in 0..DIAMETER_DIRECTIONS {
            let s = self.dirs[k].dot(p);
            self.lo[k] = self.lo[k].min(s);
            self.hi[k] = self.hi[k].max(s);
        }
    }

    pub fn diameter(&self) -> f64 {
        (0..DIAMETER_DIRECTIONS).map(|k| self.hi[k] - self.lo[k]).fold(0.0, f64::max)
    }

    /// Add the polyline vertex `p` reached at time `t` (non-decreasing).
    pub fn push(&mut self, p: Vec2, t: f64) {
        if let Some((q, s)) = self.last {
            while let Some(&c) = self.checkpoints.get(self.recorded.len()) {
                if c > t {
                    break;
                }
                let x = if t > s { q.lerp(p, (c - s) / (t - s)) } else { p };
                self.include(x);
                let d = self.diameter();
                self.recorded.push(d);
            }
        }
        self.include(p);
        self.last = Some((p, t));
    }

    pub fn is_complete(&self) -> bool {
        self.recorded.len() == self.checkpoints.len()
    }

    /// Diameters at the checkpoints reached so far.
    pub fn recorded(&self) -> &[f64] {
        &self.recorded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    /// Fitted exponent ν.
    pub exponent: f64,
    pub stderr: f64,
    /// `(ln T, ln median diameter)` at every dyadic checkpoint.
    pub windows: Vec<(f64, f64)>,
    /// Number of trailing windows used in the fit.
    pub fit_windows: usize,
    pub n_directions: usize,
    pub seed: u64,
    /// Directions resampled after hitting a corner.
    pub resampled: usize,
    /// Exponent fitted to each direction (or trial) on its own.
    pub direction_exponents: Vec<f64>,
}

/// Least-squares slope and its standard error.
pub fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let Some(slope) = linear_slope(pts) else { return (f64::NAN, f64::NAN) };
    if pts.len() < 3 {
        return (slope, 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let ssr: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    (slope, (ssr / (n - 2.0) / sxx).sqrt())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fit ν to per-trial diameter series taken at `checkpoints`: median over
/// trials, then least squares on the upper half of the log–log windows.
pub fn fit_dyadic(checkpoints: &[f64], diameters: &[Vec<f64>], seed: u64, resampled: usize) -> DiffusionEstimate {
    let k = checkpoints.len();
    let windows: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let mut col: Vec<f64> = diameters.iter().map(|d| d[i]).collect();
            (checkpoints[i].ln(), median(&mut col).max(f64::MIN_POSITIVE).ln())
        })
        .collect();
    let fit_windows = k - k / 2;
    let (exponent, stderr) = fit_line(&windows[k / 2..]);
    let direction_exponents = diameters
        .iter()
        .map(|d| {
            let pts: Vec<(f64, f64)> =
                (k / 2..k).map(|i| (checkpoints[i].ln(), d[i].max(f64::MIN_POSITIVE).ln())).collect();
            fit_line(&pts).0
        })
        .collect();
    DiffusionEstimate {
        exponent,
        stderr,
        windows,
        fit_windows,
        n_directions: diameters.len(),
        seed,
        resampled,
        direction_exponents,
    }
}

/// Run `n_trials` seeded trials in parallel; each fills a tracker over the
/// dyadic checkpoints of `t_max` and reports how many times it resampled.
pub fn estimate_diffusion<F>(n_trials: usize, t_max: f64, seed: u64, trial: F) -> Result<DiffusionEstimate>
where
    F: Fn(&mut ChaCha8Rng, &mut DiameterTracker) -> Result<usize> + Sync,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let checkpoints = dyadic_checkpoints(t_max);
    if checkpoints.len() < 4 {
        return Err(Error::InvalidArgument(format!("horizon {t_max} is too short to fit")));
    }
    let results: Vec<Result<(Vec<f64>, usize)>> = (0..n_trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k as u64);
            let mut tracker = DiameterTracker::new(checkpoints.clone());
            let resampled = trial(&mut rng, &mut tracker)?;
            if !tracker.is_complete() {
                return Err(Error::InvalidArgument("trial ended before the last checkpoint".into()));
            }
            Ok((tracker.recorded, resampled))
        })
        .collect();
    let mut diameters = Vec::with_capacity(n_trials);
    let mut resampled = 0;
    for r in results {
        let (d, n) = r?;
        diameters.push(d);
        resampled += n;
    }
    Ok(fit_dyadic(&checkpoints, &diameters, seed, resampled))
}

/// Diffusion exponent of the windtree: uniformly random directions and
/// start points, each traced to length `t_max`.
pub fn diffusion_exponent(scene: &WindtreeScene, n_directions: usize, t_max: f64, seed: u64) -> Result<DiffusionEstimate> {
    if !(t_max >= 1e3 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("T_max must be at least 1e3 (got {t_max})")));
    }
    if n_directions == 0 {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    let (a, b) = scene.cell_size();
    estimate_diffusion(n_directions, t_max, seed, |rng, tracker| {
        for attempt in 0..MAX_RESAMPLES {
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            let start = loop {
                let p = Vec2::new(rng.gen::<f64>() * a, rng.gen::<f64>() * b);
                if !scene.in_obstacle(p) {
                    break p;
                }
            };
            let mut tr = DiameterTracker::new(tracker.checkpoints.clone());
            tr.push(start, 0.0);
            let mut singular = false;
            for ev in WindtreeTracer::new(scene, start, angle, t_max)? {
                tr.push(ev.pos, ev.length);
                if ev.termination == Some(Termination::SingularHit) {
                    singular = true;
                }
            }
            if !singular {
                *tracker = tr;
                return Ok(attempt);
            }
        }
        Err(Error::AllDirectionsSingular { attempts: MAX_RESAMPLES })
    })
}

fn check_walk_args(n_steps: usize, n_trials: usize) -> Result<()> {
    if n_steps < 10_000 {
        return Err(Error::InvalidArgument(format!("random walk needs at least 1e4 steps (got {n_steps})")));
    }
    if n_trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    Ok(())
}

/// Unit-step planar random walk with uniform step angles; ν should be 1/2.
pub fn random_walk_baseline(n_steps: usize, n_trials: usize, seed: u64) -> Result<DiffusionEstimate> {
    random_walk_with_drift(n_steps, n_trials, seed, Vec2::ZERO)
}

/// Random walk whose every step also moves by `drift`; ballistic for nonzero drift.
pub fn random_walk_with_drift(n_steps: usize, n_trials: usize, seed: u64, drift: Vec2) -> Result<DiffusionEstimate> {
    check_walk_args(n_steps, n_trials)?;
    estimate_diffusion(n_trials, n_steps as f64, seed, |rng, tracker| {
        let mut p = Vec2::ZERO;
        tracker.push(p, 0.0);
        for k in 1..=n_steps {
            p += Vec2::from_angle(rng.gen::<f64>() * std::f64::consts::TAU) + drift;
            tracker.push(p, k as f64);
        }
        Ok(0)
    })
}

/// Random walk reflected into the square `[-half_width, half_width]²`; ν should be 0.
pub fn confined_walk_baseline(n_steps: usize, n_trials: usize, seed: u64, half_width: f64) -> Result<DiffusionEstimate> {
    check_walk_args(n_steps, n_trials)?;
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidArgument("box half-width must be positive".into()));
    }
    let fold = |x: f64| {
        // Reflect into [-w, w].
        let w = half_width;
        let r = (x + w).rem_euclid(4.0 * w);
        if r <= 2.0 * w {
            r - w
        } else {
            3.0 * w - r
        }
    };
    estimate_diffusion(n_trials, n_steps as f64, seed, |rng, tracker| {
        let mut p = Vec2::ZERO;
        tracker.push(p, 0.0);
        for k in 1..=n_steps {
            let q = p + Vec2::from_angle(rng.gen::<f64>() * std::f64::consts::TAU);
            p = Vec2::new(fold(q.x), fold(q.y));
            tracker.push(p, k as f64);
        }
        Ok(0)
    })
}

/// `(2m)!! / (2m+1)!!` as an exact fraction.
pub fn theoretical_windtree_rate(m: u32) -> Result<BigRational> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let mut num = BigInt::from(1u32);
    let mut den = BigInt::from(1u32);
    for k in 1..=m {
        num *= 2 * k;
        den *= 2 * k + 1;
    }
    Ok(BigRational::new(num, den))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlluminationGrid {
    pub resolution: usize,
    /// (face, ix, iy) of every cell piece with positive area.
    pub cells: Vec<(usize, usize, usize)>,
    pub areas: Vec<f64>,
    pub illuminated: Vec<bool>,
    pub n_rays: usize,
    pub ray_length: f64,
    pub seed: u64,
    /// Cells never crossed by a ray.
    pub uncovered: Vec<(usize, usize, usize)>,
    /// Area fraction of the uncovered cells.
    pub uncovered_fraction: f64,
    /// Rays that ended early at a cone point.
    pub singular_rays: usize,
}

/// Seeded ray directions; the first `n` are the same for every `n`.
pub fn ray_directions(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect()
}

/// Shoot `n_rays` geodesics of length `ray_length` from `source` and mark the
/// grid cells they cross. A coverage experiment, not a proof of darkness.
pub fn illumination_map(
    surface: &TranslationSurface,
    source: SurfacePoint,
    n_rays: usize,
    ray_length: f64,
    grid_n: usize,
    seed: u64,
) -> Result<IlluminationGrid> {
    if source.face >= surface.num_faces() || !surface.contains(source.face, source.pos) {
        return Err(Error::StartOutsideFace { face: source.face });
    }
    if surface.distance_to_vertex(&source) <= surface.tolerance().eps_len {
        return Err(Error::SourceOnVertex);
    }
    if grid_n == 0 || !(ray_length > 0.0 && ray_length.is_finite()) {
        return Err(Error::InvalidArgument("need grid_n > 0 and a positive ray length".into()));
    }
    let grid = ChartGrid::new(surface, grid_n);
    let dirs = ray_directions(n_rays, seed);
    let opts = TraceOptions { stop_at_marked: false, detect_closure: false };
    let chunk = 64;
    let partial: Vec<Result<(Vec<bool>, usize)>> = dirs
        .par_chunks(chunk)
        .map(|ds| {
            let mut lit = vec![false; grid.len()];
            let mut singular = 0;
            for &d in ds {
                for step in Tracer::new(surface, source, Vec2::from_angle(d), Limit::Length(ray_length), opts)? {
                    let s = step.segment;
                    grid.walk_segment(s.face, s.entry, s.exit, |piece, _| lit[piece] = true);
                    if step.termination == Some(Termination::SingularHit) {
                        singular += 1;
                    }
                }
            }
            Ok((lit, singular))
        })
        .collect();
    let mut lit = vec![false; grid.len()];
    let mut singular_rays = 0;
    for r in partial {
        let (l, s) = r?;
        lit.iter_mut().zip(l).for_each(|(a, b)| *a |= b);
        singular_rays += s;
    }
    let mut cells = Vec::new();
    let mut areas = Vec::new();
    let mut illuminated = Vec::new();
    let mut uncovered = Vec::new();
    let mut dark_area = 0.0;
    for (p, &on) in lit.iter().enumerate() {
        let a = grid.area(p);
        if a <= 0.0 {
            continue;
        }
        cells.push(grid.key(p));
        areas.push(a);
        illuminated.push(on);
        if !on {
            uncovered.push(grid.key(p));
            dark_area += a;
        }
    }
    Ok(IlluminationGrid {
        resolution: grid_n,
        cells,
        areas,
        illuminated,
        n_rays,
        ray_length,
        seed,
        uncovered,
        uncovered_fraction: dark_area / grid.total_area(),
        singular_rays,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityRow {
    pub length: f64,
    /// `None` when the orbit hit a cone point before reaching this length.
    pub discrepancy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub rows: Vec<ErgodicityRow>,
    /// Slope of ln(discrepancy) against ln(length); near 0 for a plateau,
    /// clearly negative for equidistributing orbits.
    pub trend_slope: Option<f64>,
    /// Whether the last discrepancy is below the first.
    pub decreasing: bool,
}

/// Discrepancy of one orbit from `start` in direction `angle` at each length.
pub fn ergodicity_report(
    surface: &TranslationSurface,
    start: SurfacePoint,
    angle: f64,
    lengths: &[f64],
    grid_n: usize,
) -> Result<ErgodicityReport> {
    if !angle.is_finite() {
        return Err(Error::InvalidArgument("direction must be finite".into()));
    }
    if lengths.is_empty() || lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) || grid_n == 0 {
        return Err(Error::InvalidArgument("need positive finite lengths and grid_n > 0".into()));
    }
    let mut targets = lengths.to_vec();
    targets.sort_by(f64::total_cmp);
    let max = *targets.last().expect("non-empty");
    let grid = ChartGrid::new(surface, grid_n);
    let mut acc = VisitAccumulator::new(&grid);
    let opts = TraceOptions { stop_at_marked: false, detect_closure: false };
    let mut rows = Vec::with_capacity(targets.len());
    let mut next = 0;
    for step in Tracer::new(surface, start, Vec2::from_angle(angle), Limit::Length(max), opts)? {
        let seg = step.segment;
        let l0 = step.length - seg.length();
        let mut from = seg.entry;
        while next < targets.len() && targets[next] <= step.length {
            let cut = if seg.length() > 0.0 { (targets[next] - l0) / seg.length() } else { 1.0 };
            let at = seg.entry.lerp(seg.exit, cut.clamp(0.0, 1.0));
            acc.add(&crate::flow::Segment { face: seg.face, entry: from, exit: at });
            from = at;
            rows.push(ErgodicityRow { length: targets[next], discrepancy: Some(acc.discrepancy()) });
            next += 1;
        }
        acc.add(&crate::flow::Segment { face: seg.face, entry: from, exit: seg.exit });
        if step.termination == Some(Termination::SingularHit) {
            break;
        }
    }
    rows.extend(targets[next..].iter().map(|&length| ErgodicityRow { length, discrepancy: None }));
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.discrepancy.filter(|d| *d > 0.0).map(|d| (r.length.ln(), d.ln())))
        .collect();
    let trend_slope = linear_slope(&pts);
    let valid: Vec<f64> = rows.iter().filter_map(|r| r.discrepancy).collect();
    let decreasing = valid.len() >= 2 && valid[valid.len() - 1] < valid[0];
    Ok(ErgodicityReport { rows, trend_slope, decreasing })
}
