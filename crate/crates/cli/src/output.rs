use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use minesite::stage1::SelectionResult;
use minesite::stage2::{CandidateSite, RegionScreening};
use minesite::{Error, Result};
use serde::Serialize;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn usd(x: f64) -> String {
    format!("{x:.2}")
}

pub fn millions(x: f64) -> String {
    format!("{:.2}", x / 1e6)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let invariant = |e: csv::Error| Error::Invariant(format!("csv encoding: {e}"));
    w.write_record(header).map_err(invariant)?;
    for r in rows {
        w.write_record(r).map_err(invariant)?;
    }
    w.into_inner().map_err(|e| Error::Invariant(e.to_string()))
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_file(path, &csv_bytes(header, rows)?)
}

pub fn stage1_table_rows(sel: &SelectionResult<f64>) -> Vec<Vec<String>> {
    sel.per_k_table
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.regions.join(";"),
                usd(r.pi_orig_usd),
                usd(r.land_cost_usd),
                usd(r.infra_cost_usd),
                usd(r.pi_adj_usd),
            ]
        })
        .collect()
}

pub const STAGE1_HEADER: [&str; 6] = [
    "K",
    "regions",
    "pi_orig_usd",
    "land_cost_usd",
    "infra_cost_usd",
    "pi_adj_usd",
];

pub fn profit_curve_rows(sel: &SelectionResult<f64>) -> Vec<Vec<String>> {
    sel.per_k_table
        .iter()
        .map(|r| vec![r.k.to_string(), usd(r.pi_adj_usd)])
        .collect()
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// GeoJSON FeatureCollection of rectangular sites, one feature per line.
pub fn sites_geojson(region_code: &str, crs: &str, sites: &[CandidateSite<f32>]) -> String {
    let mut s = String::from("{\"type\":\"FeatureCollection\",");
    if !crs.is_empty() {
        let _ = write!(
            s,
            "\"crs\":{{\"type\":\"name\",\"properties\":{{\"name\":{}}}}},",
            json_str(crs)
        );
    }
    s.push_str("\"features\":[");
    for (i, site) in sites.iter().enumerate() {
        s.push_str(if i == 0 { "\n" } else { ",\n" });
        s.push_str("{\"type\":\"Feature\",\"properties\":{");
        let _ = write!(
            s,
            "\"region_code\":{},\"anchor_col\":{},\"anchor_row\":{},\"max_slope_deg\":{},\"landuse_ok\":{}",
            json_str(region_code),
            site.anchor_col,
            site.anchor_row,
            serde_json::to_string(&site.max_slope_deg).expect("finite slope"),
            site.landuse_ok
        );
        s.push_str("},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[");
        // counter-clockwise exterior ring, closed
        let p = &site.polygon;
        let ring = if signed_area(p) < 0.0 {
            [p[0], p[3], p[2], p[1], p[0]]
        } else {
            [p[0], p[1], p[2], p[3], p[0]]
        };
        for (j, (x, y)) in ring.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "[{x:.6},{y:.6}]");
        }
        s.push_str("]]}}");
    }
    s.push_str("\n]}\n");
    s
}

fn signed_area(p: &[(f64, f64); 4]) -> f64 {
    (0..4)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % 4]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        / 2.0
}

pub const STAGE2_HEADER: [&str; 7] = [
    "region_code",
    "side_m",
    "window_px",
    "stride_px",
    "initial_count",
    "available_count",
    "retention_ratio",
];

pub fn stage2_summary_row(r: &RegionScreening<f32>) -> Vec<String> {
    let s = r.summary();
    vec![
        s.region_code,
        format!("{}", r.side_m),
        format!("{}x{}", r.window.cols, r.window.rows),
        r.stride_px.to_string(),
        s.initial_count.to_string(),
        s.available_count.to_string(),
        format!("{:.4}", s.retention_ratio),
    ]
}
