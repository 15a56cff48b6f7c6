//! ESRI ASCII grid (`.asc`) reader and writer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::affine::AffineTransform;
use super::raster::Raster;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// ESRI's documented default when `NODATA_value` is absent.
pub const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

pub fn parse_ascii_grid<V: Scalar>(text: &str, path: &Path) -> Result<Raster<V>> {
    let mut header = Header::default();
    let mut lines = text.lines().enumerate().peekable();

    while let Some(&(idx, line)) = lines.peek() {
        let line_no = idx as u64 + 1;
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        if !key.starts_with(|c: char| c.is_ascii_alphabetic()) {
            break;
        }
        let value = parts
            .next()
            .ok_or_else(|| Error::parse(path, line_no, format!("header key {key} has no value")))?;
        let num: f64 = value
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad header value {value:?} for {key}")))?;
        let count = || -> Result<usize> {
            if num < 0.0 || num.fract() != 0.0 {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("{key} must be a non-negative integer"),
                ));
            }
            Ok(num as usize)
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => header.ncols = Some(count()?),
            "nrows" => header.nrows = Some(count()?),
            "xllcorner" => header.xll = Some((num, false)),
            "xllcenter" => header.xll = Some((num, true)),
            "yllcorner" => header.yll = Some((num, false)),
            "yllcenter" => header.yll = Some((num, true)),
            "cellsize" => header.cellsize = Some(num),
            "nodata_value" => header.nodata = Some(num),
            other => return Err(Error::parse(path, line_no, format!("unknown header key {other:?}"))),
        }
        lines.next();
    }

    let ncols = header.ncols.ok_or_else(|| Error::parse(path, 1, "missing NCOLS"))?;
    let nrows = header.nrows.ok_or_else(|| Error::parse(path, 1, "missing NROWS"))?;
    let (Some((xll, xcenter)), Some((yll, ycenter)), Some(cs)) = (header.xll, header.yll, header.cellsize) else {
        return Err(Error::GeoReference(format!(
            "{}: XLLCORNER/YLLCORNER/CELLSIZE header required",
            path.display()
        )));
    };
    if !(cs > 0.0) {
        return Err(Error::GeoReference(format!(
            "{}: CELLSIZE must be positive",
            path.display()
        )));
    }
    let x_ul = if xcenter { xll - cs / 2.0 } else { xll };
    let y_ll = if ycenter { yll - cs / 2.0 } else { yll };
    let y_ul = y_ll + nrows as f64 * cs;
    let transform = AffineTransform::north_up(x_ul, y_ul, cs);

    let nodata = V::lit(header.nodata.unwrap_or(DEFAULT_NODATA));
    let expected = ncols * nrows;
    let mut values = Vec::with_capacity(expected);
    let mut last_line = 0;
    for (idx, line) in lines {
        last_line = idx as u64 + 1;
        for tok in line.split_whitespace() {
            if values.len() == expected {
                return Err(Error::parse(
                    path,
                    last_line,
                    format!("more than {expected} cell values"),
                ));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, last_line, format!("bad cell value {tok:?}")))?;
            values.push(V::lit(v));
        }
    }
    if values.len() != expected {
        return Err(Error::parse(
            path,
            last_line,
            format!("expected {expected} cell values, found {}", values.len()),
        ));
    }
    Raster::new(ncols, nrows, transform, nodata, values)
}

pub fn read_ascii_grid<V: Scalar>(path: &Path) -> Result<Raster<V>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, path)
}

/// Serializes a north-up raster. Rotated transforms cannot be expressed.
pub fn format_ascii_grid<V: Scalar>(raster: &Raster<V>) -> Result<String> {
    let t = &raster.transform;
    if !t.is_axis_aligned() || t.a != -t.e {
        return Err(Error::Unsupported("ASCII grid needs square north-up pixels".into()));
    }
    let mut out = String::new();
    let y_ll = t.f + raster.height as f64 * t.e;
    let _ = writeln!(out, "NCOLS {}", raster.width);
    let _ = writeln!(out, "NROWS {}", raster.height);
    let _ = writeln!(out, "XLLCORNER {}", t.c);
    let _ = writeln!(out, "YLLCORNER {}", y_ll);
    let _ = writeln!(out, "CELLSIZE {}", t.a);
    let _ = writeln!(out, "NODATA_VALUE {}", raster.nodata);
    for r in 0..raster.height {
        let row: Vec<String> = raster.row(r).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_ascii_grid<V: Scalar>(raster: &Raster<V>, path: &Path) -> Result<()> {
    let text = format_ascii_grid(raster)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Raster<f32>> {
        parse_ascii_grid(s, Path::new("t.asc"))
    }

    #[test]
    fn two_by_two_zeros() {
        let r = parse("ncols 2\nnrows 2\nxllcorner 100\nyllcorner 200\ncellsize 30\n0 0\n0 0\n").unwrap();
        assert_eq!((r.width, r.height), (2, 2));
        assert_eq!(r.transform, AffineTransform::north_up(100.0, 260.0, 30.0));
        assert_eq!(r.nodata, -9999.0);
        let s = r.stats().unwrap();
        assert_eq!((s.min, s.max, s.mean), (0.0, 0.0, 0.0));
    }

    #[test]
    fn center_registration() {
        let r = parse("NCOLS 1\nNROWS 1\nXLLCENTER 15\nYLLCENTER 15\nCELLSIZE 30\nNODATA_VALUE -1\n5\n").unwrap();
        assert_eq!(r.transform, AffineTransform::north_up(0.0, 30.0, 30.0));
        assert_eq!(r.nodata, -1.0);
    }

    #[test]
    fn wrapped_rows_are_accepted() {
        let r = parse("ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n3 4 5\n6\n").unwrap();
        assert_eq!(r.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn missing_georeference() {
        let e = parse("ncols 1\nnrows 1\ncellsize 30\n0\n").unwrap_err();
        assert!(matches!(e, Error::GeoReference(_)), "{e}");
    }

    #[test]
    fn bad_value_reports_line() {
        let e = parse("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0 x\n").unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 7),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn short_grid_rejected() {
        assert!(parse("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n0 0\n0\n").is_err());
    }

    #[test]
    fn write_then_read() {
        let r = parse("ncols 2\nnrows 1\nxllcorner 10\nyllcorner 20\ncellsize 30\nnodata_value -9999\n1.5 -9999\n")
            .unwrap();
        let text = format_ascii_grid(&r).unwrap();
        assert_eq!(parse(&text).unwrap(), r);
    }
}
