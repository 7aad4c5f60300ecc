//! The acceptance suite: ten numbered criteria, each reported as one line.
//!
//! Rendered output is a function of the seed only; wall-clock times are
//! checked against per-criterion budgets but not printed in the report.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::billiards::{fold_check_with, free_scene, unfold_rational, windtree_scene, BilliardTable, ObstacleSpec};
use crate::error::Result;
use crate::experiments::{
    confined_walk_baseline, diffusion_exponent, ergodicity_report, illumination_map, random_walk_baseline,
    theoretical_windtree_rate, trial_rng,
};
use crate::flow::{trace, Limit};
use crate::geometry::{GroupElement, Tolerance, Vec2};
use crate::moduli::{apply_matrix, delaunay_normalize, divergence_profile, rotate, systole_proxy};
use crate::surface::{build_from_pattern, builtin, BuiltinParams, SurfacePoint, TranslationSurface};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub within_budget: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed && c.within_budget)
    }

    /// Deterministic text table, one line per criterion.
    pub fn render(&self) -> String {
        let mut out = format!("# flattrace acceptance, seed {}\n", self.seed);
        for c in &self.criteria {
            let status = if c.passed && c.within_budget { "PASS" } else { "FAIL" };
            let budget = if c.within_budget { "" } else { " [over time budget]" };
            out += &format!("{status} {:>2} {:<28} {}{budget}\n", c.id, c.name, c.detail);
        }
        let n = self.criteria.iter().filter(|c| c.passed && c.within_budget).count();
        out += &format!("# {n}/{} criteria passed\n", self.criteria.len());
        out
    }
}

type Check = fn(u64) -> Result<(bool, String)>;

const CRITERIA: [(u32, &str, f64, Check); 10] = [
    (1, "topology", 1.0, topology),
    (2, "group-action", 10.0, group_action),
    (3, "renormalization", 30.0, renormalization),
    (4, "masur-divergence", 60.0, masur),
    (5, "estimator-calibration", 120.0, calibration),
    (6, "windtree-diffusion", 600.0, windtree),
    (7, "unfolding-equivalence", 120.0, unfolding),
    (8, "illumination", 120.0, illumination),
    (9, "equidistribution", 60.0, equidistribution),
    (10, "determinism", 60.0, determinism),
];

/// Run the criteria whose ids are in `only` (all when empty).
pub fn run_acceptance(seed: u64, only: &[u32]) -> AcceptanceReport {
    let criteria = CRITERIA
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.0))
        .map(|&(id, name, budget, check)| {
            let t0 = Instant::now();
            let (passed, detail) = check(seed).unwrap_or_else(|e| (false, format!("error: {e}")));
            let elapsed = t0.elapsed();
            CriterionOutcome {
                id,
                name,
                passed,
                within_budget: elapsed.as_secs_f64() < budget,
                detail,
                elapsed,
            }
        })
        .collect();
    AcceptanceReport { seed, criteria }
}

fn named(name: &str, params: BuiltinParams) -> Result<TranslationSurface> {
    build_from_pattern(&builtin(name, &params)?, &Tolerance::default())
}

fn test_surfaces() -> Result<Vec<(&'static str, TranslationSurface)>> {
    Ok(vec![
        ("unit-torus", named("unit-torus", BuiltinParams::default())?),
        ("rect-torus(2,1)", named("rect-torus", BuiltinParams { w: Some(2.0), h: Some(1.0), ..Default::default() })?),
        ("regular-2n-gon(4)", named("regular-2n-gon", BuiltinParams { n: Some(4), ..Default::default() })?),
        (
            "slit-torus(1/sqrt2)",
            named("slit-torus", BuiltinParams { lambda: Some(1.0 / 2f64.sqrt()), ..Default::default() })?,
        ),
    ])
}

fn topology(_seed: u64) -> Result<(bool, String)> {
    let expected: [(u32, &[u32]); 4] = [(1, &[]), (1, &[]), (2, &[2]), (2, &[1, 1])];
    let mut ok = true;
    let mut parts = Vec::new();
    for ((name, s), (g, orders)) in test_surfaces()?.iter().zip(expected) {
        let t = s.topology();
        let sum: i64 = t.cone_orders.iter().map(|&d| d as i64).sum();
        ok &= t.genus == g && t.cone_orders == orders && sum == 2 * t.genus as i64 - 2;
        parts.push(format!("{name}: g={} d={:?}", t.genus, t.cone_orders));
    }
    Ok((ok, parts.join("; ")))
}

fn random_matrix(rng: &mut impl Rng) -> GroupElement {
    loop {
        let m = [0; 4].map(|_| rng.gen_range(-2.0..2.0));
        if let Ok(g) = GroupElement::new(m[0], m[1], m[2], m[3]) {
            if g.det().abs() > 0.25 {
                return g;
            }
        }
    }
}

fn group_action(seed: u64) -> Result<(bool, String)> {
    let surfaces = test_surfaces()?;
    let mut rng = trial_rng(seed, 2);
    let (mut area_err, mut sl_err, mut comp_err) = (0f64, 0f64, 0f64);
    for k in 0..100 {
        let s = &surfaces[k % surfaces.len()].1;
        let a = random_matrix(&mut rng);
        let b = random_matrix(&mut rng);
        let sa = apply_matrix(s, &a)?;
        area_err = area_err.max((sa.area() / (a.det().abs() * s.area()) - 1.0).abs());
        // Rescale to determinant one, negating the first row if needed.
        let u = a.det().abs().sqrt().recip();
        let r = u * a.det().signum();
        let sl = GroupElement::new(a.a * r, a.b * r, a.c * u, a.d * u)?;
        sl_err = sl_err.max((apply_matrix(s, &sl)?.area() / s.area() - 1.0).abs());
        let one = systole_proxy(&apply_matrix(s, &(a * b))?)?;
        let two = systole_proxy(&apply_matrix(&apply_matrix(s, &b)?, &a)?)?;
        comp_err = comp_err.max((one - two).abs() / one);
    }
    let ok = area_err <= 1e-12 && sl_err <= 1e-12 && comp_err <= 1e-9;
    Ok((ok, format!("100 trials: area rel err {area_err:.1e}, SL area rel err {sl_err:.1e}, composition {comp_err:.1e}")))
}

fn random_point(s: &TranslationSurface, rng: &mut impl Rng) -> SurfacePoint {
    let f = rng.gen_range(0..s.num_faces());
    let v = s.face(f);
    let (mut x, mut y) = (rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
    if x + y > 1.0 {
        (x, y) = (1.0 - x, 1.0 - y);
    }
    SurfacePoint::new(f, v[0] + (v[1] - v[0]) * x + (v[2] - v[0]) * y)
}

fn renormalization(seed: u64) -> Result<(bool, String)> {
    let surfaces = test_surfaces()?;
    let mut rng = trial_rng(seed, 3);
    let (mut dev, mut area_err, mut flips) = (0f64, 0f64, 0usize);
    for k in 0..100 {
        let base = &surfaces[k % surfaces.len()].1;
        let m = random_matrix(&mut rng);
        let s = apply_matrix(base, &m)?;
        let (n, log) = delaunay_normalize(&s)?;
        flips += log.len();
        area_err = area_err.max((n.area() - s.area()).abs() / s.area());
        let start = random_point(&s, &mut rng);
        let angle = rng.gen_range(0.0..2.0 * PI);
        let len = rng.gen_range(0.1..10.0);
        let a = trace(&s, start, angle, Limit::Length(len))?;
        let b = trace(&n, log.map_point(start), angle, Limit::Length(len))?;
        dev = dev.max(n.point_distance(&log.map_point(a.end()), &b.end()));
    }
    let ok = dev <= 1e-6 && area_err <= 1e-12;
    Ok((ok, format!("100 traces: max endpoint deviation {dev:.1e}, area rel err {area_err:.1e}, {flips} flips")))
}

fn masur(_seed: u64) -> Result<(bool, String)> {
    let surfaces = test_surfaces()?;
    let torus = &surfaces[0].1;
    let slit = &surfaces[3].1;
    let slope = |s: &TranslationSurface| -> Result<f64> {
        Ok(divergence_profile(s, 8.0, 0.5)?.slope_between(2.0, 8.0).unwrap_or(f64::NAN))
    };
    let st = slope(torus)?;
    let ss = slope(slit)?;
    let rotated = rotate(torus, (1.0 / 2f64.sqrt()).atan());
    let min = divergence_profile(&rotated, 10.0, 0.25)?.min_systole();
    let ok = (st + 1.0).abs() <= 0.05 && (ss + 1.0).abs() <= 0.05 && min >= 0.1;
    Ok((ok, format!("slope torus {st:.4}, slit-torus {ss:.4}; rotated torus min systole {min:.4}")))
}

fn calibration(seed: u64) -> Result<(bool, String)> {
    let rw = random_walk_baseline(1_000_000, 100, seed)?.exponent;
    let free = free_scene(None)?;
    let ballistic = diffusion_exponent(&free, 20, 1e6, seed)?.exponent;
    let bounded = confined_walk_baseline(1_000_000, 10, seed, 5.0)?.exponent;
    let ok = (rw - 0.5).abs() <= 0.07 && (ballistic - 1.0).abs() <= 0.01 && bounded <= 0.1;
    Ok((ok, format!("random walk {rw:.4}, ballistic {ballistic:.4}, bounded {bounded:.4}")))
}

/// Generic (irrational-ratio) rectangle for the m = 1 windtree.
pub fn generic_rectangle() -> ObstacleSpec {
    ObstacleSpec { width: Some(1.0 / (2.0 * 2f64.sqrt())), height: Some((5f64.sqrt() - 1.0) / 4.0), steps: None }
}

fn windtree(seed: u64) -> Result<(bool, String)> {
    let scene = windtree_scene(1, None, &generic_rectangle())?;
    let est = diffusion_exponent(&scene, 20, 1e7, seed)?;
    let nu = est.exponent;
    let two_thirds = BigRational::new(2.into(), 3.into());
    let eight_fifteenths = BigRational::new(8.into(), 15.into());
    let exact = theoretical_windtree_rate(1)? == two_thirds && theoretical_windtree_rate(2)? == eight_fifteenths;
    let r50 = theoretical_windtree_rate(50)?.to_f64().unwrap_or(f64::NAN);
    let asym = (r50 / (PI.sqrt() / (2.0 * 50f64.sqrt())) - 1.0).abs();
    // Reported only: m = 2 at a shorter horizon.
    let nu2 = diffusion_exponent(&windtree_scene(2, None, &ObstacleSpec::default())?, 20, 1e6, seed)?.exponent;
    let ok = (nu - 2.0 / 3.0).abs() <= 0.1 && exact && asym <= 0.05;
    Ok((
        ok,
        format!(
            "m=1 nu {nu:.4} +- {:.4} (target 2/3, {} resampled); exact rates ok={exact}; m=50 asymptote rel err {asym:.4}; m=2 nu {nu2:.4} at T=1e6 (target 8/15, not gated)",
            est.stderr, est.resampled
        ),
    ))
}

fn unfolding(seed: u64) -> Result<(bool, String)> {
    let tables = [
        ("square", BilliardTable::unit_square()),
        ("triangle(pi/2,pi/4,pi/4)", BilliardTable::triangle(FRAC_PI_2, FRAC_PI_4)?),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, (name, table)) in tables.iter().enumerate() {
        let unf = unfold_rational(table)?;
        let devs: Vec<f64> = (0..10_000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, 7_000_000 + 100_000 * k as u64 + i);
                let (lo, hi) = bounds(&table.boundary);
                let start = loop {
                    let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                    if table.contains_strict(p) {
                        break p;
                    }
                };
                let angle = rng.gen_range(0.0..2.0 * PI);
                fold_check_with(&unf, start, angle, 1000).unwrap_or(f64::INFINITY)
            })
            .collect();
        let max = devs.iter().copied().fold(0.0, f64::max);
        ok &= max < 1e-6;
        parts.push(format!("{name}: max deviation {max:.1e}"));
    }
    Ok((ok, format!("10^4 trials x 10^3 reflections; {}", parts.join("; "))))
}

fn bounds(pts: &[Vec2]) -> (Vec2, Vec2) {
    let lo = pts.iter().fold(Vec2::new(f64::INFINITY, f64::INFINITY), |a, p| Vec2::new(a.x.min(p.x), a.y.min(p.y)));
    let hi = pts
        .iter()
        .fold(Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |a, p| Vec2::new(a.x.max(p.x), a.y.max(p.y)));
    (lo, hi)
}

fn illumination(seed: u64) -> Result<(bool, String)> {
    let surfaces = test_surfaces()?;
    let torus = &surfaces[0].1;
    let octagon = &surfaces[2].1;
    let generic = Vec2::new(1.0 / PI, 0.5772156649);
    let t_src = torus.locate(generic).expect("inside the unit square");
    let o_src = octagon.locate(Vec2::new(0.5772156649, 1.0 / PI + 0.5)).expect("inside the octagon");
    let t = illumination_map(torus, t_src, 10_000, 200.0, 100, seed)?.uncovered_fraction;
    let o = illumination_map(octagon, o_src, 10_000, 200.0, 100, seed)?.uncovered_fraction;
    Ok((t <= 1e-3 && o <= 1e-2, format!("uncovered fraction torus {t:.2e}, octagon {o:.2e}")))
}

fn equidistribution(_seed: u64) -> Result<(bool, String)> {
    let surfaces = test_surfaces()?;
    let torus = &surfaces[0].1;
    let slit = &surfaces[3].1;
    let start = torus.locate(Vec2::new(0.3719, 0.2718)).expect("inside the unit square");
    let lengths = [1e2, 1e3, 1e4, 1e5];
    let r = ergodicity_report(torus, start, 2f64.sqrt().atan(), &lengths, 10)?;
    let last = r.rows.last().and_then(|row| row.discrepancy).unwrap_or(f64::NAN);
    let s_start = slit.locate(Vec2::new(0.3719, 0.2718)).expect("inside the slit torus");
    let p = ergodicity_report(slit, s_start, FRAC_PI_2, &lengths, 10)?;
    let plateau = p.rows.iter().map(|row| row.discrepancy.unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    let ok = r.decreasing && last < 0.05 && plateau > 0.2;
    Ok((ok, format!("torus slope sqrt2 discrepancy {last:.4} at 1e5; slit-torus vertical minimum {plateau:.4}")))
}

fn determinism(seed: u64) -> Result<(bool, String)> {
    let run = || -> Result<String> {
        let scene = windtree_scene(1, None, &generic_rectangle())?;
        let a = diffusion_exponent(&scene, 8, 1e5, seed)?;
        let b = random_walk_baseline(10_000, 8, seed)?;
        let torus = &test_surfaces()?[0].1;
        let src = torus.locate(Vec2::new(0.3, 0.6)).expect("inside");
        let c = illumination_map(torus, src, 200, 20.0, 20, seed)?;
        Ok(serde_json::to_string(&(a, b, c)).expect("serializable"))
    };
    let first = run()?;
    let second = run()?;
    Ok((first == second, format!("repeat runs identical ({} bytes compared)", first.len())))
}
