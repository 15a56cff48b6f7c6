use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Six-coefficient map from pixel indices to projected world coordinates:
///
/// ```text
/// x = c + col * a + row * b
/// y = f + col * d + row * e
/// ```
///
/// Coefficient order follows the rasterio/`Affine` convention `(a, b, c, d, e, f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub e: T,
    pub f: T,
}

impl<T: Scalar> AffineTransform<T> {
    pub fn new(a: T, b: T, c: T, d: T, e: T, f: T) -> Self {
        Self { a, b, c, d, e, f }
    }

    /// North-up transform with square pixels of `resolution` meters and the
    /// upper-left corner of pixel (0, 0) at `(x_ul, y_ul)`.
    pub fn north_up(x_ul: T, y_ul: T, resolution: T) -> Self {
        Self::new(resolution, T::zero(), x_ul, T::zero(), -resolution, y_ul)
    }

    pub fn determinant(&self) -> T {
        self.a * self.e - self.b * self.d
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.b == T::zero() && self.d == T::zero()
    }

    /// Upper-left corner of pixel `(col, row)`. Fractional indices address
    /// points inside a pixel, e.g. `(col + 0.5, row + 0.5)` is its center.
    pub fn pixel_to_world(&self, col: T, row: T) -> (T, T) {
        (
            self.c + col * self.a + row * self.b,
            self.f + col * self.d + row * self.e,
        )
    }

    /// Exact inverse of [`pixel_to_world`](Self::pixel_to_world).
    pub fn world_to_pixel(&self, x: T, y: T) -> Result<(T, T)> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return Err(Error::GeoReference(format!(
                "transform {self:?} is singular (determinant {det})"
            )));
        }
        let dx = x - self.c;
        let dy = y - self.f;
        let col = (self.e * dx - self.b * dy) / det;
        let row = (self.a * dy - self.d * dx) / det;
        Ok((col, row))
    }

    /// Transform of a window whose pixel (0, 0) is pixel `(col_off, row_off)` here.
    pub fn offset(&self, col_off: usize, row_off: usize) -> Self {
        let (c, f) = self.pixel_to_world(T::from_count(col_off as u64), T::from_count(row_off as u64));
        Self { c, f, ..*self }
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self {
            c: self.c + dx,
            f: self.f + dy,
            ..*self
        }
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
            self.e - other.e,
            self.f - other.f,
        ]
        .into_iter()
        .map(|v| v.abs())
        .fold(T::zero(), T::max)
    }

    pub fn validate(&self) -> Result<()> {
        let det = self.determinant();
        if det == T::zero() || !det.is_finite() {
            return Err(Error::GeoReference(format!("singular transform {self:?}")));
        }
        if self.is_axis_aligned() && !(self.a > T::zero() && self.e < T::zero()) {
            return Err(Error::GeoReference(format!(
                "axis-aligned transform must have a > 0 and e < 0, got a={} e={}",
                self.a, self.e
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn korea_tm() -> AffineTransform<f64> {
        AffineTransform::new(30.0, 0.0, 200_000.0, 0.0, -30.0, 600_000.0)
    }

    #[test]
    fn origin_maps_to_translation() {
        assert_eq!(korea_tm().pixel_to_world(0.0, 0.0), (200_000.0, 600_000.0));
    }

    #[test]
    fn col_two_row_one() {
        assert_eq!(korea_tm().pixel_to_world(2.0, 1.0), (200_060.0, 599_970.0));
        assert_eq!(korea_tm().world_to_pixel(200_060.0, 599_970.0).unwrap(), (2.0, 1.0));
    }

    #[test]
    fn identity() {
        let t = AffineTransform::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(t.pixel_to_world(5.0, 7.0), (5.0, 7.0));
    }

    #[test]
    fn singular_is_rejected() {
        let t = AffineTransform::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(t.world_to_pixel(1.0, 1.0), Err(Error::GeoReference(_))));
        assert!(t.validate().is_err());
    }

    #[test]
    fn offset_keeps_world_position() {
        let t = korea_tm();
        let o = t.offset(3, 4);
        assert_eq!(o.pixel_to_world(1.0, 2.0), t.pixel_to_world(4.0, 6.0));
    }

    #[test]
    fn works_in_single_precision() {
        let t = AffineTransform::<f32>::north_up(0.0, 300.0, 30.0);
        assert_eq!(t.pixel_to_world(2.0, 1.0), (60.0, 270.0));
        assert_eq!(t.world_to_pixel(60.0, 270.0).unwrap(), (2.0, 1.0));
    }
}
