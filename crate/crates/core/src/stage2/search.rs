use rayon::prelude::*;

use super::{CandidateSite, Window};
use crate::geodata::Raster;
use crate::scalar::Scalar;

/// Single-band scan; see [`sliding_window_search_banded`].
pub fn sliding_window_search<V: Scalar>(
    slope: &Raster<V>,
    window: &Window,
    stride_px: usize,
    theta: V,
) -> Vec<CandidateSite<V>> {
    sliding_window_search_banded(slope, window, stride_px, theta, 1)
}

/// Emits a site for every window position (top-left anchors on a
/// `stride_px` lattice from pixel (0, 0)) whose pixels are all valid and
/// strictly below `theta`. Sites are ordered by `(row, col)`.
///
/// Anchor rows are split into `bands` contiguous groups scanned in parallel
/// on the current rayon pool; the output does not depend on `bands`.
pub fn sliding_window_search_banded<V: Scalar>(
    slope: &Raster<V>,
    window: &Window,
    stride_px: usize,
    theta: V,
    bands: usize,
) -> Vec<CandidateSite<V>> {
    let (w, h) = (window.cols, window.rows);
    let stride = stride_px.max(1);
    if w == 0 || h == 0 || w > slope.width || h > slope.height {
        log::warn!(
            "window {w}x{h} px does not fit raster {}x{}; no sites",
            slope.width,
            slope.height
        );
        return Vec::new();
    }
    let anchor_rows: Vec<usize> = (0..=slope.height - h).step_by(stride).collect();
    let anchor_cols: Vec<usize> = (0..=slope.width - w).step_by(stride).collect();
    let bands = bands.clamp(1, anchor_rows.len());
    let per_band = anchor_rows.len().div_ceil(bands);

    let scan = Scan {
        slope,
        window,
        theta,
        anchor_cols: &anchor_cols,
    };
    anchor_rows
        .par_chunks(per_band)
        .map(|rows| scan.band(rows))
        .collect::<Vec<_>>()
        .concat()
}

struct Scan<'a, V> {
    slope: &'a Raster<V>,
    window: &'a Window,
    theta: V,
    anchor_cols: &'a [usize],
}

impl<V: Scalar> Scan<'_, V> {
    #[inline]
    fn good(&self, v: V) -> bool {
        // NaN and nodata fail; strict inequality at theta
        v < self.theta && v != self.slope.nodata
    }

    /// Scans anchor rows `rows` (ascending, equally spaced). Keeps, per
    /// anchor column, the number of consecutive raster rows whose
    /// horizontal run covers the window; an anchor at row `r` passes when
    /// that count reaches `h` on row `r + h - 1`.
    fn band(&self, rows: &[usize]) -> Vec<CandidateSite<V>> {
        let (w, h) = (self.window.cols, self.window.rows);
        let raster = self.slope;
        let first = rows[0];
        let last = rows[rows.len() - 1] + h;
        let mut vrun = vec![0usize; self.anchor_cols.len()];
        let mut hrun = vec![0usize; raster.width];
        let mut next = 0;
        let mut out = Vec::new();

        for r in first..last {
            let line = raster.row(r);
            let mut run = 0usize;
            for (slot, &v) in hrun.iter_mut().zip(line) {
                run = if self.good(v) { run + 1 } else { 0 };
                *slot = run;
            }
            for (count, &c) in vrun.iter_mut().zip(self.anchor_cols) {
                *count = if hrun[c + w - 1] >= w { *count + 1 } else { 0 };
            }
            while next < rows.len() && rows[next] + h - 1 == r {
                let ar = rows[next];
                for (i, &c) in self.anchor_cols.iter().enumerate() {
                    if vrun[i] >= h {
                        out.push(self.site(c, ar));
                    }
                }
                next += 1;
            }
        }
        out
    }

    fn site(&self, col: usize, row: usize) -> CandidateSite<V> {
        let (w, h) = (self.window.cols, self.window.rows);
        let raster = self.slope;
        let mut max = V::neg_infinity();
        for r in row..row + h {
            for &v in &raster.row(r)[col..col + w] {
                max = max.max(v);
            }
        }
        let t = &raster.transform;
        let (x0, y0) = t.pixel_to_world(col as f64, row as f64);
        // unit vectors along the column and row axes
        let col_len = t.a.hypot(t.d);
        let row_len = t.b.hypot(t.e);
        let (ux, uy) = (t.a / col_len, t.d / col_len);
        let (vx, vy) = (t.b / row_len, t.e / row_len);
        let (wm, hm) = (self.window.width_m, self.window.height_m);
        CandidateSite {
            anchor_col: col,
            anchor_row: row,
            window_cols: w as u32,
            window_rows: h as u32,
            polygon: [
                (x0, y0),
                (x0 + wm * ux, y0 + wm * uy),
                (x0 + wm * ux + hm * vx, y0 + wm * uy + hm * vy),
                (x0 + hm * vx, y0 + hm * vy),
            ],
            max_slope_deg: max,
            landuse_ok: false,
        }
    }
}
