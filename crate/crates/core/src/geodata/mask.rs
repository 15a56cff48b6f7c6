use super::polygon::MultiPolygon;
use super::raster::Raster;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Crops `raster` to the pixel-aligned bounding box of `boundary` and sets
/// every pixel whose center lies outside the polygon to nodata.
///
/// Membership is decided per row by a scanline over the polygon edges mapped
/// into pixel space, so the cost is proportional to the crop size plus the
/// edge count per row rather than to `pixels x edges`.
pub fn mask_clip<V: Scalar>(raster: &Raster<V>, boundary: &MultiPolygon<f64>) -> Result<Raster<V>> {
    let bb = boundary
        .bbox()
        .ok_or_else(|| Error::EmptyExtent("boundary has no vertices".into()))?;
    let t = &raster.transform;

    let mut min_c = f64::INFINITY;
    let mut max_c = f64::NEG_INFINITY;
    let mut min_r = f64::INFINITY;
    let mut max_r = f64::NEG_INFINITY;
    for (x, y) in [
        (bb.min_x, bb.min_y),
        (bb.max_x, bb.min_y),
        (bb.max_x, bb.max_y),
        (bb.min_x, bb.max_y),
    ] {
        let (c, r) = t.world_to_pixel(x, y)?;
        min_c = min_c.min(c);
        max_c = max_c.max(c);
        min_r = min_r.min(r);
        max_r = max_r.max(r);
    }
    let clamp = |v: f64, hi: usize| v.max(0.0).min(hi as f64) as usize;
    let col0 = clamp(min_c.floor(), raster.width);
    let col1 = clamp(max_c.ceil(), raster.width);
    let row0 = clamp(min_r.floor(), raster.height);
    let row1 = clamp(max_r.ceil(), raster.height);
    if col0 >= col1 || row0 >= row1 {
        return Err(Error::EmptyExtent(format!(
            "boundary [{}, {}] x [{}, {}] does not overlap the raster",
            bb.min_x, bb.max_x, bb.min_y, bb.max_y
        )));
    }

    // polygon edges in pixel space of the source raster
    let mut edges = Vec::new();
    for ring in boundary.rings() {
        let pts: Vec<(f64, f64)> = ring
            .iter()
            .map(|&(x, y)| t.world_to_pixel(x, y))
            .collect::<Result<_>>()?;
        let n = pts.len();
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            if p.1 != q.1 {
                edges.push((p, q));
            }
        }
    }

    let (w, h) = (col1 - col0, row1 - row0);
    let mut out = raster.window(col0, row0, w, h)?;
    let mut inside = vec![false; w];
    let mut crossings: Vec<f64> = Vec::new();
    for r in 0..h {
        let v = (row0 + r) as f64 + 0.5;
        crossings.clear();
        for &(p, q) in &edges {
            if (p.1 <= v) != (q.1 <= v) {
                crossings.push(p.0 + (v - p.1) * (q.0 - p.0) / (q.1 - p.1));
            }
        }
        crossings.sort_by(f64::total_cmp);
        inside.fill(false);
        // center u = c + 0.5 is inside when it lies in [x_2i, x_2i+1)
        for pair in crossings.chunks_exact(2) {
            let lo = (pair[0] - 0.5).ceil().max(col0 as f64);
            let hi = (pair[1] - 0.5).ceil().min(col1 as f64);
            if lo < hi {
                for c in lo as usize..hi as usize {
                    inside[c - col0] = true;
                }
            }
        }
        let row = &mut out.values[r * w..(r + 1) * w];
        for (cell, &keep) in row.iter_mut().zip(&inside) {
            if !keep {
                *cell = out.nodata;
            }
        }
    }
    Ok(out)
}
