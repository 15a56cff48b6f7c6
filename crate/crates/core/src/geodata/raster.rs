use serde::{Deserialize, Serialize};

use super::affine::AffineTransform;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Single-band grid with geo-referencing. Values are row-major, row 0 at the
/// top (the `f` edge of the transform).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<V> {
    pub width: usize,
    pub height: usize,
    pub transform: AffineTransform<f64>,
    pub nodata: V,
    pub values: Vec<V>,
}

/// Summary statistics over valid (non-nodata) cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterStats {
    pub valid_count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Descriptive metadata of a raster, e.g. for a dataset too large to ship.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterInfo {
    pub format: String,
    pub data_type: String,
    pub resolution_m: f64,
    pub height: usize,
    pub width: usize,
    pub stats: RasterStats,
}

impl<V: Scalar> Raster<V> {
    pub fn new(
        width: usize,
        height: usize,
        transform: AffineTransform<f64>,
        nodata: V,
        values: Vec<V>,
    ) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Validation(format!(
                "raster holds {} values, expected {width}x{height}",
                values.len()
            )));
        }
        transform.validate()?;
        Ok(Self {
            width,
            height,
            transform,
            nodata,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, transform: AffineTransform<f64>, nodata: V, value: V) -> Result<Self> {
        Self::new(width, height, transform, nodata, vec![value; width * height])
    }

    /// Pixel size in meters along the column axis.
    pub fn resolution(&self) -> f64 {
        self.transform.a.hypot(self.transform.d)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> V {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, v: V) {
        self.values[row * self.width + col] = v;
    }

    pub fn row(&self, row: usize) -> &[V] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    #[inline]
    pub fn is_nodata(&self, v: V) -> bool {
        v.is_nan() || v == self.nodata
    }

    pub fn stats(&self) -> Option<RasterStats> {
        let mut n = 0u64;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0f64;
        for &v in &self.values {
            if self.is_nodata(v) {
                continue;
            }
            let v = v.as_f64();
            n += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (n > 0).then(|| RasterStats {
            valid_count: n,
            min,
            max,
            mean: sum / n as f64,
        })
    }

    /// Sub-grid `[col0, col0 + w) x [row0, row0 + h)` with its transform shifted
    /// so every retained pixel keeps its world position.
    pub fn window(&self, col0: usize, row0: usize, w: usize, h: usize) -> Result<Self> {
        if col0 + w > self.width || row0 + h > self.height {
            return Err(Error::EmptyExtent(format!(
                "window {w}x{h}+{col0}+{row0} exceeds raster {}x{}",
                self.width, self.height
            )));
        }
        let mut values = Vec::with_capacity(w * h);
        for r in row0..row0 + h {
            values.extend_from_slice(&self.row(r)[col0..col0 + w]);
        }
        Ok(Self {
            width: w,
            height: h,
            transform: self.transform.offset(col0, row0),
            nodata: self.nodata,
            values,
        })
    }

    /// Checks the slope domain `[0, 90)` on every valid cell.
    pub fn validate_slope(&self) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if self.is_nodata(v) {
                continue;
            }
            if v < V::zero() || v >= V::lit(90.0) {
                return Err(Error::Validation(format!(
                    "slope {v} at (col {}, row {}) outside [0, 90)",
                    i % self.width,
                    i / self.width
                )));
            }
        }
        Ok(())
    }

    pub fn map<W: Scalar>(&self, nodata: W, f: impl Fn(V) -> W) -> Raster<W> {
        Raster {
            width: self.width,
            height: self.height,
            transform: self.transform,
            nodata,
            values: self
                .values
                .iter()
                .map(|&v| if self.is_nodata(v) { nodata } else { f(v) })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_grid_stats() {
        let r = Raster::<f32>::filled(2, 2, AffineTransform::north_up(0.0, 60.0, 30.0), -9999.0, 0.0).unwrap();
        let s = r.stats().unwrap();
        assert_eq!((s.min, s.max, s.mean, s.valid_count), (0.0, 0.0, 0.0, 4));
    }

    #[test]
    fn nodata_excluded_from_stats() {
        // hand computed: valid cells 1,2,4,5,7,8 -> min 1, max 8, mean 27/6 = 4.5
        let values = vec![1.0, 2.0, -9999.0, 4.0, 5.0, -9999.0, 7.0, 8.0, f32::NAN];
        let r = Raster::new(3, 3, AffineTransform::north_up(0.0, 90.0, 30.0), -9999.0, values).unwrap();
        let s = r.stats().unwrap();
        assert_eq!(s.valid_count, 6);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 8.0);
        assert_eq!(s.mean, 4.5);
    }

    #[test]
    fn all_nodata_has_no_stats() {
        let r = Raster::<f64>::filled(2, 1, AffineTransform::north_up(0.0, 30.0, 30.0), -1.0, -1.0).unwrap();
        assert!(r.stats().is_none());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let e = Raster::<f32>::new(2, 2, AffineTransform::north_up(0.0, 0.0, 1.0), 0.0, vec![0.0; 3]);
        assert!(matches!(e, Err(Error::Validation(_))));
    }

    #[test]
    fn slope_domain() {
        let mut r = Raster::<f32>::filled(2, 1, AffineTransform::north_up(0.0, 0.0, 1.0), -9999.0, 89.9).unwrap();
        r.validate_slope().unwrap();
        r.set(1, 0, 90.0);
        assert!(r.validate_slope().is_err());
        r.set(1, 0, -9999.0);
        r.validate_slope().unwrap();
    }
}
