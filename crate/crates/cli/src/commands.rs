use std::time::Instant;

use num_traits::ToPrimitive;
use serde_json::json;

use flattrace::billiards::{
    billiard_trace, fold_check_with, unfold_rational, windtree_scene, windtree_trace, BilliardTable, ObstacleSpec,
    PlanarTrajectory, SceneSpec, WindtreeScene,
};
use flattrace::experiments::{
    diffusion_exponent, ergodicity_report, illumination_map, random_walk_baseline, random_walk_with_drift,
    theoretical_windtree_rate, DiffusionEstimate,
};
use flattrace::flow::{discrepancy, trace_with, Limit, TraceOptions};
use flattrace::moduli::{
    apply_matrix, delaunay_normalize, divergence_profile, geodesic_flow, saddle_connections, systole_proxy,
};
use flattrace::surface::{builtin, BuiltinParams};
use flattrace::{build_from_pattern, GroupElement, SurfacePoint, SurfaceSpec, Tolerance, TranslationSurface, Vec2};

use crate::args::*;
use crate::output::{csv_string, emit, json_string, num_row, read_json, write_text, CliError};

pub fn dispatch(command: Command, seed: u64) -> Result<(), CliError> {
    match command {
        Command::Validate(a) => validate(a),
        Command::Trace(a) => trace_cmd(a),
        Command::Act(a) => act(a),
        Command::Flow(a) => flow(a),
        Command::Systole(a) => systole(a),
        Command::Diverge(a) => diverge(a),
        Command::Billiard(a) => billiard(a),
        Command::Unfold(a) => unfold(a),
        Command::Windtree(a) => windtree(a),
        Command::Diffusion(a) => diffusion(a, seed),
        Command::Baseline(a) => baseline(a, seed),
        Command::Illuminate(a) => illuminate(a, seed),
        Command::Ergodicity(a) => ergodicity(a),
        Command::Accept(a) => accept(a, seed),
    }
}

fn load_surface(a: &SurfaceArgs) -> Result<TranslationSurface, CliError> {
    let tol = Tolerance::new(a.eps_len, a.eps_angle)?;
    let pattern = match (&a.source.surface, &a.source.builtin) {
        (Some(path), _) => read_json::<SurfaceSpec>(path)?.to_pattern()?,
        (None, Some(name)) => builtin(name, &BuiltinParams { w: a.w, h: a.h, n: a.n, lambda: a.lambda })?,
        (None, None) => return Err(CliError::usage("give --surface or --builtin")),
    };
    Ok(build_from_pattern(&pattern, &tol)?)
}

fn locate(s: &TranslationSurface, p: &PointArgs) -> Result<SurfacePoint, CliError> {
    s.locate_in_polygon(p.polygon, Vec2::new(p.x, p.y))
        .ok_or_else(|| CliError::usage(format!("point ({}, {}) is not inside polygon {}", p.x, p.y, p.polygon)))
}

fn surface_summary(s: &TranslationSurface) -> serde_json::Value {
    let t = s.topology();
    json!({
        "genus": t.genus,
        "cone_orders": t.cone_orders,
        "area": s.area(),
        "num_faces": t.num_faces,
        "num_edges": t.num_edges,
        "num_vertices": t.num_vertices,
    })
}

fn validate(a: ValidateArgs) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    write_text(a.out.output.as_deref(), &json_string(&surface_summary(&s)))
}

fn trace_cmd(a: TraceArgs) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    let start = locate(&s, &a.point)?;
    let limit = match (a.length, a.crossings) {
        (Some(l), None) => Limit::Length(l),
        (None, Some(n)) => Limit::Crossings(n),
        _ => return Err(CliError::usage("give exactly one of --length or --crossings")),
    };
    let tr = trace_with(&s, start, a.angle, limit, TraceOptions::default())?;
    if let Some(n) = a.discrepancy {
        let report = discrepancy(&tr, &s, n)?;
        return write_text(a.out.output.as_deref(), &json_string(&report));
    }
    let mut cum = 0.0;
    let rows = tr.segments.iter().map(|seg| {
        cum += seg.length();
        let mut r = vec![seg.face.to_string()];
        r.extend(num_row([seg.entry.x, seg.entry.y, seg.exit.x, seg.exit.y, cum]));
        r
    });
    let csv = csv_string(&["face", "x_in", "y_in", "x_out", "y_out", "cum_length"], rows);
    emit(&a.out, Format::Csv, || json_string(&tr), Some(csv))
}

fn act(a: ActArgs) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    let [p, q, r, t] = a.matrix;
    let m = GroupElement::new(p, q, r, t)?;
    let image = apply_matrix(&s, &m)?;
    let mut summary = surface_summary(&image);
    summary["det"] = json!(m.det());
    summary["systole_proxy"] = json!(systole_proxy(&image)?);
    summary["faces"] = json!(image.faces());
    write_text(a.out.output.as_deref(), &json_string(&summary))
}

fn flow(a: FlowArgs) -> Result<(), CliError> {
    if !(a.dt > 0.0 && a.t >= 0.0 && a.t.is_finite()) {
        return Err(CliError::usage("need --dt > 0 and a finite --t >= 0"));
    }
    let mut s = load_surface(&a.surface)?;
    if a.renormalize {
        s = delaunay_normalize(&s)?.0;
    }
    let n = (a.t / a.dt + 1e-9).floor() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            s = geodesic_flow(&s, a.dt, a.renormalize)?;
        }
        rows.push([k as f64 * a.dt, systole_proxy(&s)?, s.min_edge_length(), s.area()]);
    }
    let csv = csv_string(&["t", "systole", "min_edge", "area"], rows.iter().map(|r| num_row(*r)));
    let json = || {
        let items: Vec<_> = rows
            .iter()
            .map(|r| json!({"t": r[0], "systole": r[1], "min_edge": r[2], "area": r[3]}))
            .collect();
        json_string(&items)
    };
    emit(&a.out, Format::Csv, json, Some(csv))
}

fn systole(a: SystoleArgs) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    let mut out = json!({ "systole_proxy": systole_proxy(&s)? });
    if let Some(l) = a.length {
        let sc = saddle_connections(&s, l)?;
        out["saddle_connections"] = json!(sc.iter().map(|c| json!({
            "holonomy": c.holonomy,
            "length": c.length(),
            "endpoints": c.endpoints,
        })).collect::<Vec<_>>());
    }
    write_text(a.out.output.as_deref(), &json_string(&out))
}

fn diverge(a: DivergeArgs) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    let p = divergence_profile(&s, a.tmax, a.dt)?;
    let to = a.to.unwrap_or(a.tmax);
    let csv = csv_string(&["t", "systole"], p.samples.iter().map(|&(t, v)| num_row([t, v])));
    let json = || {
        json_string(&json!({
            "samples": p.samples,
            "slope": p.slope,
            "window": [a.from, to],
            "window_slope": p.slope_between(a.from, to),
            "min_systole": p.min_systole(),
        }))
    };
    emit(&a.out, Format::Csv, json, Some(csv))
}

fn load_table(a: &TableArgs) -> Result<BilliardTable, CliError> {
    if let Some([alpha, beta]) = a.triangle {
        return Ok(BilliardTable::triangle(alpha, beta)?);
    }
    match &a.vertices {
        Some(v) => {
            let pts = parse_points(v).map_err(CliError::usage)?;
            Ok(BilliardTable::new(pts.into_iter().map(Vec2::from).collect())?)
        }
        None => Ok(BilliardTable::unit_square()),
    }
}

fn planar_csv(tr: &PlanarTrajectory) -> String {
    csv_string(&["t", "x", "y"], tr.to_csv_rows().into_iter().map(num_row))
}

fn billiard(a: BilliardArgs) -> Result<(), CliError> {
    let table = load_table(&a.table)?;
    let limit = match (a.length, a.reflections) {
        (Some(l), None) => Limit::Length(l),
        (None, Some(n)) => Limit::Crossings(n),
        _ => return Err(CliError::usage("give exactly one of --length or --reflections")),
    };
    let tr = billiard_trace(&table, Vec2::new(a.x, a.y), a.angle, limit)?;
    emit(&a.out, Format::Csv, || json_string(&tr), Some(planar_csv(&tr)))
}

fn unfold(a: UnfoldArgs) -> Result<(), CliError> {
    let table = load_table(&a.table)?;
    let unf = unfold_rational(&table)?;
    let mut out = surface_summary(&unf.surface);
    out["group_order"] = json!(unf.group_order);
    out["copies"] = json!(unf.copies.iter().map(|g| [g.a, g.b, g.c, g.d]).collect::<Vec<_>>());
    if let (Some(n), Some(x), Some(y), Some(angle)) = (a.fold_check, a.x, a.y, a.angle) {
        out["fold_check"] = json!(fold_check_with(&unf, Vec2::new(x, y), angle, n)?);
    }
    write_text(a.out.output.as_deref(), &json_string(&out))
}

fn load_scene(a: &SceneArgs) -> Result<WindtreeScene, CliError> {
    if let Some(path) = &a.scene {
        return Ok(read_json::<SceneSpec>(path)?.build()?);
    }
    let steps = match &a.steps {
        Some(s) => Some(parse_points(s).map_err(CliError::usage)?),
        None => None,
    };
    let obstacle = ObstacleSpec { width: a.width, height: a.height, steps };
    Ok(windtree_scene(a.m.unwrap_or(1), None, &obstacle)?)
}

fn windtree(a: WindtreeArgs) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let tr = windtree_trace(&scene, Vec2::new(a.x, a.y), a.angle, a.length)?;
    emit(&a.out, Format::Csv, || json_string(&tr), Some(planar_csv(&tr)))
}

fn windows_csv(est: &DiffusionEstimate) -> String {
    csv_string(&["ln_t", "ln_diameter"], est.windows.iter().map(|&(t, d)| num_row([t, d])))
}

/// Compare against the reference value when `--check` is set.
fn check(c: &CheckArgs, nu: f64, default_expect: f64, default_tol: f64) -> Result<(), CliError> {
    if !c.check {
        return Ok(());
    }
    let expect = c.expect.unwrap_or(default_expect);
    let tol = c.tolerance.unwrap_or(default_tol);
    if (nu - expect).abs() <= tol {
        Ok(())
    } else {
        Err(CliError::runtime("CheckFailed", format!("exponent {nu} misses {expect} +- {tol}")))
    }
}

fn diffusion(a: DiffusionArgs, seed: u64) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let est = diffusion_exponent(&scene, a.directions, a.tmax, seed)?;
    let rate = theoretical_windtree_rate(scene.m as u32)?;
    let mut out = serde_json::to_value(&est).expect("serializable");
    out["m"] = json!(scene.m);
    out["t_max"] = json!(a.tmax);
    out["theoretical_rate"] = json!(rate.to_string());
    out["theoretical_rate_value"] = json!(rate.to_f64());
    if let Some(p) = &a.windows {
        write_text(Some(p), &windows_csv(&est))?;
    }
    emit(&a.out, Format::Json, || json_string(&out), Some(windows_csv(&est)))?;
    check(&a.check, est.exponent, rate.to_f64().unwrap_or(f64::NAN), 0.1)
}

fn baseline(a: BaselineArgs, seed: u64) -> Result<(), CliError> {
    let (est, reference) = match a.drift {
        Some(d) if d != [0.0, 0.0] => (random_walk_with_drift(a.steps, a.trials, seed, Vec2::from(d))?, 1.0),
        _ => (random_walk_baseline(a.steps, a.trials, seed)?, 0.5),
    };
    if let Some(p) = &a.windows {
        write_text(Some(p), &windows_csv(&est))?;
    }
    emit(&a.out, Format::Json, || json_string(&est), Some(windows_csv(&est)))?;
    check(&a.check, est.exponent, reference, if reference == 0.5 { 0.07 } else { 0.02 })
}

fn illuminate(a: IlluminateArgs, seed: u64) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    let src = locate(&s, &a.point)?;
    let g = illumination_map(&s, src, a.rays, a.ray_length, a.grid, seed)?;
    write_text(a.out.output.as_deref(), &json_string(&g))
}

fn ergodicity(a: ErgodicityArgs) -> Result<(), CliError> {
    let s = load_surface(&a.surface)?;
    let start = locate(&s, &a.point)?;
    let r = ergodicity_report(&s, start, a.angle, &a.lengths, a.grid)?;
    let rows = r.rows.iter().map(|row| {
        vec![row.length.to_string(), row.discrepancy.map(|d| d.to_string()).unwrap_or_default()]
    });
    let csv = csv_string(&["length", "discrepancy"], rows);
    emit(&a.out, Format::Csv, || json_string(&r), Some(csv))
}

fn accept(a: AcceptArgs, seed: u64) -> Result<(), CliError> {
    let t0 = Instant::now();
    let report = flattrace::acceptance::run_acceptance(seed, &a.only);
    for c in &report.criteria {
        eprintln!("criterion {:>2}: {:.2} s", c.id, c.elapsed.as_secs_f64());
    }
    eprintln!("total: {:.2} s", t0.elapsed().as_secs_f64());
    emit(&a.out, Format::Csv, || json_string(&report), Some(report.render()))?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::runtime("AcceptanceFailed", "at least one criterion failed"))
    }
}
