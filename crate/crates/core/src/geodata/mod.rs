//! Loading, validation and geo-referencing of areal and lattice inputs.

mod affine;
pub mod ascii_grid;
pub mod geotiff;
mod mask;
mod polygon;
mod raster;
mod regions;

use std::fs::File;
use std::io::Read;
use std::path::Path;

pub use affine::AffineTransform;
pub use mask::mask_clip;
pub use polygon::{BoundingBox, MultiPolygon, Polygon};
pub use raster::{Raster, RasterInfo, RasterStats};
pub use regions::{
    join, load_regions, parse_areal_csv, parse_geometry, ArealRow, Exclusion, RegionRecord, RegionSet,
    MONTHLY_SUM_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reads a GeoTIFF or ESRI ASCII grid, chosen by the file's leading bytes.
pub fn load_raster<V: Scalar>(path: &Path) -> Result<Raster<V>> {
    let mut magic = [0u8; 4];
    let n = File::open(path)
        .and_then(|mut f| f.read(&mut magic))
        .map_err(|e| Error::io(path, e))?;
    match &magic[..n] {
        b"II*\0" | b"MM\0*" | b"II+\0" | b"MM\0+" => geotiff::read_geotiff(path),
        m if m.iter().all(|b| b.is_ascii()) && n > 0 => ascii_grid::read_ascii_grid(path),
        _ => Err(Error::Unsupported(format!(
            "{}: neither GeoTIFF nor ESRI ASCII grid",
            path.display()
        ))),
    }
}
