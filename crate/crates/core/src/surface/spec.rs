//! Serialized surface descriptions.

use serde::{Deserialize, Serialize};

use super::builtin::{builtin, BuiltinParams};
use super::pattern::{PatternPolygon, PolygonPattern};
use crate::error::Result;
use crate::geometry::Vec2;

/// One of `{ "edges": [[x,y],…], "pairing": […] }`,
/// `{ "polygons": [{ "origin": [x,y], "edges": […] }, …], "pairing": […] }` or
/// `{ "builtin": name, "params": {…} }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SurfaceSpec {
    Edges {
        edges: Vec<Vec2>,
        pairing: Vec<usize>,
    },
    Polygons {
        polygons: Vec<PatternPolygon>,
        pairing: Vec<usize>,
    },
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BuiltinParams,
    },
}

impl SurfaceSpec {
    pub fn to_pattern(&self) -> Result<PolygonPattern> {
        match self {
            SurfaceSpec::Edges { edges, pairing } => Ok(PolygonPattern::single(edges.clone(), pairing.clone())),
            SurfaceSpec::Polygons { polygons, pairing } => {
                Ok(PolygonPattern { polygons: polygons.clone(), pairing: pairing.clone() })
            }
            SurfaceSpec::Builtin { builtin: name, params } => builtin(name, params),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        let a: SurfaceSpec = serde_json::from_str(r#"{"edges": [[1,0],[0,1],[-1,0],[0,-1]], "pairing": [2,3,0,1]}"#).unwrap();
        assert_eq!(a.to_pattern().unwrap().num_edges(), 4);
        let b: SurfaceSpec = serde_json::from_str(r#"{"builtin": "regular-2n-gon", "params": {"n": 4}}"#).unwrap();
        assert_eq!(b.to_pattern().unwrap().num_edges(), 8);
        let c: SurfaceSpec = serde_json::from_str(
            r#"{"polygons": [{"edges": [[1,0],[0,1],[-1,0],[0,-1]]}], "pairing": [2,3,0,1]}"#,
        )
        .unwrap();
        assert_eq!(c.to_pattern().unwrap().polygons.len(), 1);
        assert!(serde_json::from_str::<SurfaceSpec>(r#"{"edges": [[1,0]]}"#).is_err());
    }
}
