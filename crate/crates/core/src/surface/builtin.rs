//! Built-in polygon patterns.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::pattern::{PatternPolygon, PolygonPattern};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Parameters for [`builtin`]; unused fields are ignored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuiltinParams {
    /// Rectangle width (`rect-torus`).
    #[serde(default)]
    pub w: Option<f64>,
    /// Rectangle height (`rect-torus`).
    #[serde(default)]
    pub h: Option<f64>,
    /// Half the number of sides (`regular-2n-gon`).
    #[serde(default)]
    pub n: Option<usize>,
    /// Slit length (`slit-torus`).
    #[serde(default)]
    pub lambda: Option<f64>,
}

pub const BUILTIN_NAMES: [&str; 4] = ["unit-torus", "rect-torus", "regular-2n-gon", "slit-torus"];

pub fn builtin(name: &str, params: &BuiltinParams) -> Result<PolygonPattern> {
    match name {
        "unit-torus" => torus_pattern(1.0, 1.0),
        "rect-torus" => torus_pattern(params.w.unwrap_or(1.0), params.h.unwrap_or(1.0)),
        "regular-2n-gon" => regular_polygon_pattern(params.n.unwrap_or(4)),
        "slit-torus" => slit_torus_pattern(params.lambda.unwrap_or(1.0 / 2f64.sqrt())),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

/// `w × h` rectangle with opposite sides identified.
pub fn torus_pattern(w: f64, h: f64) -> Result<PolygonPattern> {
    if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
        return Err(Error::BadParam(format!("torus sides must be positive (w={w}, h={h})")));
    }
    Ok(PolygonPattern::single(
        vec![Vec2::new(w, 0.0), Vec2::new(0.0, h), Vec2::new(-w, 0.0), Vec2::new(0.0, -h)],
        vec![2, 3, 0, 1],
    ))
}

/// Regular `2n`-gon with unit sides and opposite sides identified.
pub fn regular_polygon_pattern(n: usize) -> Result<PolygonPattern> {
    if n < 2 {
        return Err(Error::BadParam(format!("regular-2n-gon needs n >= 2 (got {n})")));
    }
    let half: Vec<Vec2> = (0..n).map(|k| Vec2::from_angle(k as f64 * PI / n as f64)).collect();
    // Second half is the exact negation of the first, so paired sides match bit for bit.
    let edges: Vec<Vec2> = half.iter().copied().chain(half.iter().map(|&e| -e)).collect();
    let pairing = (0..2 * n).map(|k| (k + n) % (2 * n)).collect();
    Ok(PolygonPattern::single(edges, pairing))
}

/// A `1 × 2` torus with two horizontal slits of length `lambda` at heights 0
/// and 1, starting at x = 0, re-glued crosswise.
///
/// Laid out as four rectangles: `[0,λ]×[0,1]`, `[λ,1]×[0,1]`, `[0,λ]×[1,2]`,
/// `[λ,1]×[1,2]`. Each rectangle's top side over the slit is glued to its own
/// bottom side, so each half of the torus closes up on itself across the slit.
pub fn slit_torus_pattern(lambda: f64) -> Result<PolygonPattern> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::BadParam(format!("slit length must lie in (0, 1) (got {lambda})")));
    }
    let rect = |origin: Vec2, w: f64| {
        PatternPolygon::new(
            origin,
            vec![Vec2::new(w, 0.0), Vec2::new(0.0, 1.0), Vec2::new(-w, 0.0), Vec2::new(0.0, -1.0)],
        )
    };
    let polygons = vec![
        rect(Vec2::new(0.0, 0.0), lambda),
        rect(Vec2::new(lambda, 0.0), 1.0 - lambda),
        rect(Vec2::new(0.0, 1.0), lambda),
        rect(Vec2::new(lambda, 1.0), 1.0 - lambda),
    ];
    // sides per rectangle: bottom, right, top, left
    let pairing = vec![2, 7, 0, 5, 14, 3, 12, 1, 10, 15, 8, 13, 6, 11, 4, 9];
    Ok(PolygonPattern { polygons, pairing })
}
