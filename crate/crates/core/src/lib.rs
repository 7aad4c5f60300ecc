//! Translation surfaces and their dynamics.
//!
//! Surfaces are glued from polygons by translations and stored as
//! triangulations with translation-only chart transitions. On top of that
//! the crate provides straight-line flow tracing, the GL(2,R) action with
//! Delaunay renormalization, polygonal billiards (direct and unfolded), the
//! periodic windtree model, and an experiment harness for diffusion
//! exponents, illumination coverage and equidistribution.

// `!(x > 0.0)` guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod billiards;
pub mod chart_grid;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod geometry;
pub mod moduli;
pub mod surface;

pub use error::{Error, Result};
pub use geometry::{GroupElement, Tolerance, Vec2};
pub use surface::{build_from_pattern, PolygonPattern, SurfaceSpec, SurfacePoint, SurfaceTopology, TranslationSurface};
