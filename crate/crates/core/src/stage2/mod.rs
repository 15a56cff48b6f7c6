//! Lattice-level screening: slide a unit-site window over each selected
//! region's slope raster, keep windows that are entirely flatter than the
//! threshold, then drop those touching a disallowed land-use class.

mod landuse;
mod search;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use landuse::{check_coregistered, landuse_filter, mark_landuse};
pub use search::{sliding_window_search, sliding_window_search_banded};

use crate::economics::{snap_ceil, RegionPlan};
use crate::error::{Error, Result};
use crate::geodata::{mask_clip, Raster, RegionRecord};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideRounding {
    /// `ceil(sqrt(area))`
    CeilInt,
    /// `ceil(sqrt(area))` rounded up to a multiple of 5 m.
    #[default]
    CeilMult5,
}

/// Land-use classes of the national land-use status map used by the bundled data.
pub mod landuse_codes {
    pub const URBAN: i64 = 1;
    pub const AGRICULTURAL: i64 = 2;
    pub const FORESTRY: i64 = 3;
    pub const INDUSTRIAL: i64 = 4;
    pub const HERITAGE: i64 = 5;
    pub const RESERVED: i64 = 6;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default, bound(deserialize = "V: Scalar + Deserialize<'de>"))]
pub struct ScreeningParams<V> {
    pub max_slope_deg: V,
    pub stride_m: f64,
    pub side_rounding: SideRounding,
    pub allowed_landuse_codes: BTreeSet<i64>,
}

impl<V: Scalar> Default for ScreeningParams<V> {
    fn default() -> Self {
        Self {
            max_slope_deg: V::lit(6.0),
            stride_m: 20.0,
            side_rounding: SideRounding::CeilMult5,
            allowed_landuse_codes: BTreeSet::from([landuse_codes::AGRICULTURAL, landuse_codes::INDUSTRIAL]),
        }
    }
}

impl<V: Scalar> ScreeningParams<V> {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_slope_deg > V::zero() && self.max_slope_deg < V::lit(90.0)) {
            return Err(Error::Config(format!(
                "screening.max_slope_deg = {}: must be in (0, 90)",
                self.max_slope_deg
            )));
        }
        if !(self.stride_m > 0.0) || !self.stride_m.is_finite() {
            return Err(Error::Config(format!(
                "screening.stride_m = {}: must be > 0",
                self.stride_m
            )));
        }
        Ok(())
    }
}

/// Search window: pixel footprint plus the unit-site size in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub cols: usize,
    pub rows: usize,
    pub width_m: f64,
    pub height_m: f64,
}

impl Window {
    /// Square unit site of `side_m` on a grid of `resolution_m`.
    pub fn square(side_m: f64, resolution_m: f64) -> Self {
        let px = window_pixels(side_m, resolution_m);
        Self {
            cols: px,
            rows: px,
            width_m: side_m,
            height_m: side_m,
        }
    }

    /// Window of whole pixels whose site covers the full footprint.
    pub fn pixels(cols: usize, rows: usize, resolution_m: f64) -> Self {
        Self {
            cols,
            rows,
            width_m: cols as f64 * resolution_m,
            height_m: rows as f64 * resolution_m,
        }
    }
}

/// One feasible unit site. The anchor is the window's top-left pixel in the
/// clipped raster; `polygon` holds the site's corners in world coordinates
/// starting at the anchor's upper-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSite<V> {
    pub anchor_col: usize,
    pub anchor_row: usize,
    pub window_cols: u32,
    pub window_rows: u32,
    pub polygon: [(f64, f64); 4],
    pub max_slope_deg: V,
    pub landuse_ok: bool,
}

impl<V: Scalar> CandidateSite<V> {
    pub fn anchor(&self) -> (usize, usize) {
        (self.anchor_col, self.anchor_row)
    }

    pub fn upper_left(&self) -> (f64, f64) {
        self.polygon[0]
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let xs = self.polygon.iter().map(|p| p.0);
        let ys = self.polygon.iter().map(|p| p.1);
        (
            xs.clone().fold(f64::INFINITY, f64::min),
            ys.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
            ys.fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Side of the square unit site for `net_area_m2`, whole meters.
pub fn unit_site_side<T: Scalar>(net_area_m2: T, rounding: SideRounding) -> T {
    if !(net_area_m2 > T::zero()) {
        return T::zero();
    }
    let side = snap_ceil(net_area_m2.sqrt());
    match rounding {
        SideRounding::CeilInt => side,
        SideRounding::CeilMult5 => {
            let five = T::lit(5.0);
            (side / five).ceil() * five
        }
    }
}

/// Pixels needed to cover `side_m`; at least one for any positive side.
pub fn window_pixels(side_m: f64, resolution_m: f64) -> usize {
    if !(side_m > 0.0) {
        return 0;
    }
    (snap_ceil(side_m / resolution_m) as usize).max(1)
}

/// Stride in whole pixels: `max(1, round(stride_m / resolution_m))`.
pub fn stride_pixels(stride_m: f64, resolution_m: f64) -> usize {
    ((stride_m / resolution_m).round() as usize).max(1)
}

/// Screening output for one region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionScreening<V> {
    pub region_code: String,
    pub side_m: f64,
    pub window: Window,
    pub stride_px: usize,
    /// Every slope-feasible site with its land-use flag set.
    pub initial: Vec<CandidateSite<V>>,
    /// Sites that also pass the land-use filter.
    pub available: Vec<CandidateSite<V>>,
    /// Clipped slope raster the search ran on.
    pub clipped_transform: crate::geodata::AffineTransform<f64>,
    pub clipped_size: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub region_code: String,
    pub initial_count: usize,
    pub available_count: usize,
    pub retention_ratio: f64,
}

impl<V: Scalar> RegionScreening<V> {
    pub fn summary(&self) -> RegionSummary {
        let i = self.initial.len();
        let a = self.available.len();
        RegionSummary {
            region_code: self.region_code.clone(),
            initial_count: i,
            available_count: a,
            retention_ratio: if i == 0 { 0.0 } else { a as f64 / i as f64 },
        }
    }
}

/// Clips both rasters to the region, sizes the window from the plan's net
/// area and runs the slope search followed by the land-use filter.
/// `bands` is the number of row bands scanned in parallel.
pub fn screen_region<V: Scalar>(
    region: &RegionRecord<f64>,
    plan: &RegionPlan<f64>,
    slope: &Raster<V>,
    landuse: &Raster<V>,
    sp: &ScreeningParams<V>,
    bands: usize,
) -> Result<RegionScreening<V>> {
    sp.validate()?;
    if !(plan.net_area_m2 > 0.0) {
        return Err(Error::Domain(format!(
            "region {}: net area {} must be positive to size a unit site",
            region.region_code, plan.net_area_m2
        )));
    }
    check_coregistered(slope, landuse)?;
    let slope_j = mask_clip(slope, &region.boundary)?;
    let landuse_j = mask_clip(landuse, &region.boundary)?;
    let side_m = unit_site_side(plan.net_area_m2, sp.side_rounding);
    let res = slope_j.resolution();
    let window = Window::square(side_m, res);
    let stride_px = stride_pixels(sp.stride_m, res);
    let mut initial = sliding_window_search_banded(&slope_j, &window, stride_px, sp.max_slope_deg, bands);
    mark_landuse(&mut initial, &landuse_j, &sp.allowed_landuse_codes)?;
    let available = initial.iter().filter(|s| s.landuse_ok).cloned().collect();
    Ok(RegionScreening {
        region_code: region.region_code.clone(),
        side_m,
        window,
        stride_px,
        initial,
        available,
        clipped_transform: slope_j.transform,
        clipped_size: (slope_j.width, slope_j.height),
    })
}
