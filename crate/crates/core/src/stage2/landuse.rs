use std::collections::BTreeSet;

use super::CandidateSite;
use crate::error::{Error, Result};
use crate::geodata::Raster;
use crate::scalar::Scalar;

/// Largest transform coefficient difference tolerated between co-registered grids.
pub const COREGISTRATION_TOLERANCE: f64 = 1e-6;

pub fn check_coregistered<V: Scalar, W: Scalar>(a: &Raster<V>, b: &Raster<W>) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::CoRegistration(format!(
            "grid sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let d = a.transform.max_abs_diff(&b.transform);
    if !(d <= COREGISTRATION_TOLERANCE) {
        return Err(Error::CoRegistration(format!(
            "transforms differ by {d:e}: {:?} vs {:?}",
            a.transform, b.transform
        )));
    }
    Ok(())
}

fn footprint_allowed<V: Scalar>(
    site: &CandidateSite<impl Scalar>,
    landuse: &Raster<V>,
    allowed: &BTreeSet<i64>,
) -> bool {
    let (c0, r0) = site.anchor();
    let (w, h) = (site.window_cols as usize, site.window_rows as usize);
    if c0 + w > landuse.width || r0 + h > landuse.height {
        return false;
    }
    (r0..r0 + h).all(|r| {
        landuse.row(r)[c0..c0 + w]
            .iter()
            .all(|&v| !landuse.is_nodata(v) && v.round().to_i64().is_some_and(|code| allowed.contains(&code)))
    })
}

/// Sets `landuse_ok` on every site: true when each footprint pixel carries an allowed code.
pub fn mark_landuse<S: Scalar, V: Scalar>(
    sites: &mut [CandidateSite<S>],
    landuse: &Raster<V>,
    allowed: &BTreeSet<i64>,
) -> Result<()> {
    for s in sites.iter_mut() {
        s.landuse_ok = footprint_allowed(s, landuse, allowed);
    }
    Ok(())
}

/// Keeps the sites whose whole footprint is on allowed land-use codes.
/// `landuse` must share the grid the sites were found on.
pub fn landuse_filter<S: Scalar, V: Scalar>(
    sites: &[CandidateSite<S>],
    landuse: &Raster<V>,
    allowed: &BTreeSet<i64>,
) -> Vec<CandidateSite<S>> {
    sites
        .iter()
        .filter(|s| footprint_allowed(s, landuse, allowed))
        .map(|s| CandidateSite {
            landuse_ok: true,
            ..s.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::AffineTransform;
    use crate::stage2::{landuse_codes::*, sliding_window_search, Window};

    fn grid(v: f32) -> Raster<f32> {
        Raster::filled(4, 4, AffineTransform::north_up(0.0, 120.0, 30.0), -9999.0, v).unwrap()
    }

    fn sites() -> Vec<CandidateSite<f32>> {
        sliding_window_search(&grid(1.0), &Window::pixels(2, 2, 30.0), 1, 6.0)
    }

    #[test]
    fn all_allowed_is_noop() {
        let lu = grid(AGRICULTURAL as f32);
        let all = BTreeSet::from([URBAN, AGRICULTURAL, FORESTRY, INDUSTRIAL, HERITAGE, RESERVED]);
        let out = landuse_filter(&sites(), &lu, &all);
        assert_eq!(out.len(), 9);
        assert!(out.iter().all(|s| s.landuse_ok));
    }

    #[test]
    fn urban_pixel_removes_sites() {
        let mut lu = grid(AGRICULTURAL as f32);
        lu.set(0, 0, URBAN as f32);
        let out = landuse_filter(&sites(), &lu, &BTreeSet::from([AGRICULTURAL]));
        assert_eq!(out.len(), 8);
        assert!(out.iter().all(|s| s.anchor() != (0, 0)));
    }

    #[test]
    fn empty_input() {
        assert!(landuse_filter::<f32, f32>(&[], &grid(2.0), &BTreeSet::from([2])).is_empty());
    }

    #[test]
    fn nodata_is_never_allowed() {
        let lu = grid(-9999.0);
        let mut s = sites();
        mark_landuse(&mut s, &lu, &BTreeSet::from([-9999])).unwrap();
        assert!(s.iter().all(|s| !s.landuse_ok));
    }

    #[test]
    fn misaligned_grids() {
        let a = grid(1.0);
        let mut b = grid(1.0);
        b.transform = b.transform.translated(1e-3, 0.0);
        assert!(matches!(check_coregistered(&a, &b), Err(Error::CoRegistration(_))));
        b.transform = a.transform.translated(1e-7, 0.0);
        check_coregistered(&a, &b).unwrap();
    }
}
