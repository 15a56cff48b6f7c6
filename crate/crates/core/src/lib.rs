//! Two-stage site selection for mining farms powered by surplus electricity.
//!
//! Stage 1 ([`stage1`]) picks the set of administrative regions that maximizes
//! annual profit after land and infrastructure costs. Stage 2 ([`stage2`])
//! scans 30 m slope rasters inside each chosen region for rectangular unit
//! sites that are flat enough to build on and carry an allowed land-use code.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar type used by the file loaders and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod economics;
pub mod error;
pub mod geodata;
pub mod scalar;
pub mod stage1;
pub mod stage2;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Transform = geodata::AffineTransform<f64>;
pub type Boundary = geodata::MultiPolygon<f64>;
pub type Region = geodata::RegionRecord<f64>;
pub type SlopeRaster = geodata::Raster<f32>;
pub type LandUseRaster = geodata::Raster<f32>;
pub type Params = economics::EconomicParams<f64>;
pub type Plan = economics::RegionPlan<f64>;
pub type Candidates = stage1::CandidateSet<f64>;
pub type Selection = stage1::SelectionResult<f64>;
pub type Site = stage2::CandidateSite<f32>;
pub type Screening = stage2::ScreeningParams<f32>;
