//! Areal inputs: per-region surplus energy and land price joined with boundaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::polygon::{MultiPolygon, Polygon};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance between an annual total and the sum of its months.
pub const MONTHLY_SUM_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord<T> {
    pub region_code: String,
    pub name: String,
    pub annual_surplus_kwh: T,
    pub monthly_surplus_kwh: Option<Vec<T>>,
    /// Average official land price, KRW/m².
    pub land_price: T,
    pub boundary: MultiPolygon<T>,
}

impl<T: Scalar> RegionRecord<T> {
    pub fn validate(&self) -> Result<()> {
        let code = &self.region_code;
        if !(self.annual_surplus_kwh >= T::zero()) || !self.annual_surplus_kwh.is_finite() {
            return Err(Error::Validation(format!(
                "region {code}: annual surplus {} must be >= 0",
                self.annual_surplus_kwh
            )));
        }
        if !(self.land_price > T::zero()) || !self.land_price.is_finite() {
            return Err(Error::Validation(format!(
                "region {code}: land price {} must be > 0",
                self.land_price
            )));
        }
        if let Some(months) = &self.monthly_surplus_kwh {
            if months.len() != 12 {
                return Err(Error::Validation(format!(
                    "region {code}: {} monthly values, expected 12",
                    months.len()
                )));
            }
            let sum: T = months.iter().copied().sum();
            let tol = T::lit(MONTHLY_SUM_TOLERANCE) * self.annual_surplus_kwh.abs();
            if (sum - self.annual_surplus_kwh).abs() > tol {
                return Err(Error::Validation(format!(
                    "region {code}: monthly sum {sum} disagrees with annual {}",
                    self.annual_surplus_kwh
                )));
            }
        }
        self.boundary
            .validate()
            .map_err(|e| Error::Validation(format!("region {code}: boundary: {e}")))
    }
}

/// A region dropped during loading and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub region_code: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    /// Sorted by region code.
    pub records: Vec<RegionRecord<f64>>,
    pub excluded: Vec<Exclusion>,
}

impl RegionSet {
    pub fn get(&self, code: &str) -> Option<&RegionRecord<f64>> {
        self.records.iter().find(|r| r.region_code == code)
    }
}

const REQUIRED_COLUMNS: [&str; 5] = ["region_code", "name", "year", "surplus_kwh", "land_price_krw_m2"];

#[derive(Default)]
struct Accum {
    name: String,
    year: Option<String>,
    annual: Option<f64>,
    annual_line: u64,
    months: BTreeMap<u8, f64>,
    price: Option<f64>,
    missing_surplus: bool,
    missing_price: bool,
}

/// Areal table as parsed, before the geometry join.
#[derive(Debug, Clone, PartialEq)]
pub struct ArealRow {
    pub region_code: String,
    pub name: String,
    pub annual_surplus_kwh: Option<f64>,
    pub monthly_surplus_kwh: Option<Vec<f64>>,
    pub land_price: Option<f64>,
    pub problem: Option<String>,
}

pub fn parse_areal_csv(text: &str, path: &Path) -> Result<Vec<ArealRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = col(name).ok_or_else(|| Error::Config(format!("{}: missing column {name:?}", path.display())))?;
    }
    let [i_code, i_name, i_year, i_surplus, i_price] = idx;
    let i_month = col("month");

    let mut acc: BTreeMap<String, Accum> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("");
        let code = field(i_code).to_string();
        if code.is_empty() {
            return Err(Error::parse(path, line, "empty region_code"));
        }
        let number = |i: usize, what: &str| -> Result<Option<f64>> {
            let s = field(i);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| Error::parse(path, line, format!("{what}: not a number: {s:?}")))
        };
        let surplus = number(i_surplus, "surplus_kwh")?;
        let price = number(i_price, "land_price_krw_m2")?;
        if let Some(s) = surplus {
            if s < 0.0 {
                return Err(Error::Validation(format!(
                    "{}:{line}: region {code}: negative surplus {s}",
                    path.display()
                )));
            }
        }
        if let Some(p) = price {
            if p <= 0.0 {
                return Err(Error::Validation(format!(
                    "{}:{line}: region {code}: land price {p} must be > 0",
                    path.display()
                )));
            }
        }
        let month = match i_month.map(field) {
            None | Some("") => None,
            Some(m) if m.eq_ignore_ascii_case("annual") => None,
            Some(m) => match m.parse::<u8>() {
                Ok(v @ 1..=12) => Some(v),
                _ => {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("month must be 1-12 or 'annual', got {m:?}"),
                    ))
                }
            },
        };

        let a = acc.entry(code.clone()).or_default();
        if a.name.is_empty() {
            a.name = field(i_name).to_string();
        }
        let year = field(i_year).to_string();
        match &a.year {
            Some(y) if *y != year => {
                return Err(Error::Validation(format!(
                    "{}:{line}: region {code} has rows for years {y} and {year}",
                    path.display()
                )))
            }
            _ => a.year = Some(year),
        }
        match price {
            Some(p) => match a.price {
                Some(q) if q != p => {
                    return Err(Error::Validation(format!(
                        "{}:{line}: region {code} has conflicting land prices {q} and {p}",
                        path.display()
                    )))
                }
                _ => a.price = Some(p),
            },
            None => a.missing_price = true,
        }
        match (month, surplus) {
            (_, None) => a.missing_surplus = true,
            (None, Some(s)) => {
                if a.annual.is_some() {
                    return Err(Error::Validation(format!(
                        "{}:{line}: duplicate region_code {code} (second annual row; first at line {})",
                        path.display(),
                        a.annual_line
                    )));
                }
                a.annual = Some(s);
                a.annual_line = line;
            }
            (Some(m), Some(s)) => {
                if a.months.insert(m, s).is_some() {
                    return Err(Error::Validation(format!(
                        "{}:{line}: duplicate region_code {code} for month {m}",
                        path.display()
                    )));
                }
            }
        }
    }

    let mut rows = Vec::with_capacity(acc.len());
    for (code, a) in acc {
        let mut problem = None;
        let monthly = (a.months.len() == 12).then(|| a.months.values().copied().collect::<Vec<_>>());
        let annual = match (a.annual, &monthly) {
            (Some(total), Some(m)) => {
                let sum: f64 = m.iter().sum();
                if (sum - total).abs() > MONTHLY_SUM_TOLERANCE * total.abs() {
                    return Err(Error::Validation(format!(
                        "region {code}: monthly sum {sum} differs from annual {total} by more than 0.5%"
                    )));
                }
                Some(total)
            }
            (Some(total), None) => Some(total),
            (None, Some(m)) => Some(m.iter().sum()),
            (None, None) => {
                problem = Some(if a.months.is_empty() {
                    "missing surplus".to_string()
                } else {
                    format!("incomplete monthly surplus ({} of 12 months)", a.months.len())
                });
                None
            }
        };
        if a.missing_surplus && annual.is_none() && problem.is_none() {
            problem = Some("missing surplus".into());
        }
        if a.price.is_none() {
            problem.get_or_insert_with(|| "missing land price".into());
        }
        rows.push(ArealRow {
            region_code: code,
            name: a.name,
            annual_surplus_kwh: annual,
            monthly_surplus_kwh: monthly.filter(|_| annual.is_some()),
            land_price: a.price,
            problem,
        });
    }
    Ok(rows)
}

fn is_geographic_crs(name: &str) -> bool {
    let n = name.to_ascii_uppercase();
    n.contains("CRS84")
        || ["4326", "4019", "4737", "4166", "4162"]
            .iter()
            .any(|code| n.ends_with(&format!(":{code}")) || n.ends_with(&format!("::{code}")))
}

fn parse_ring(v: &Value) -> Option<Vec<(f64, f64)>> {
    v.as_array()?
        .iter()
        .map(|p| {
            let p = p.as_array()?;
            Some((p.first()?.as_f64()?, p.get(1)?.as_f64()?))
        })
        .collect()
}

fn parse_polygon(v: &Value) -> Option<Polygon<f64>> {
    let rings = v.as_array()?;
    let exterior = parse_ring(rings.first()?)?;
    let holes = rings[1..].iter().map(parse_ring).collect::<Option<Vec<_>>>()?;
    Some(Polygon::new(exterior, holes))
}

pub fn parse_geometry(text: &str, path: &Path) -> Result<BTreeMap<String, MultiPolygon<f64>>> {
    let bad = |msg: String| Error::parse(path, 0, msg);
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::parse(path, e.line() as u64, e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("expected a GeoJSON FeatureCollection".into()));
    }
    let crs_name = doc.pointer("/crs/properties/name").and_then(Value::as_str);
    if let Some(name) = crs_name {
        if is_geographic_crs(name) {
            return Err(Error::GeoReference(format!(
                "{}: CRS {name} is geographic; a projected CRS in meters is required",
                path.display()
            )));
        }
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing features array".into()))?;

    let mut out = BTreeMap::new();
    let mut all_lonlat = true;
    for (i, f) in features.iter().enumerate() {
        let code = match f.pointer("/properties/region_code") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(bad(format!("feature {i}: missing properties.region_code"))),
        };
        let geom = f
            .get("geometry")
            .ok_or_else(|| bad(format!("feature {i} ({code}): missing geometry")))?;
        let coords = geom.get("coordinates");
        let mp = match (geom.get("type").and_then(Value::as_str), coords) {
            (Some("Polygon"), Some(c)) => parse_polygon(c).map(MultiPolygon::single),
            (Some("MultiPolygon"), Some(c)) => c
                .as_array()
                .and_then(|ps| ps.iter().map(parse_polygon).collect::<Option<Vec<_>>>())
                .map(MultiPolygon),
            (t, _) => return Err(bad(format!("feature {i} ({code}): unsupported geometry type {t:?}"))),
        }
        .ok_or_else(|| bad(format!("feature {i} ({code}): malformed coordinates")))?;
        all_lonlat &= mp.rings().flatten().all(|&(x, y)| x.abs() <= 180.0 && y.abs() <= 90.0);
        if out.insert(code.clone(), mp).is_some() {
            return Err(Error::Validation(format!(
                "{}: duplicate region_code {code} in geometry",
                path.display()
            )));
        }
    }
    // RFC 7946 defaults to WGS84 when no crs member is given
    if crs_name.is_none() && all_lonlat && !out.is_empty() {
        return Err(Error::GeoReference(format!(
            "{}: no crs member and all coordinates look like lon/lat degrees",
            path.display()
        )));
    }
    Ok(out)
}

/// Joins the areal table with boundary polygons. Regions lacking surplus,
/// price, or geometry are listed in [`RegionSet::excluded`].
pub fn load_regions(areal_csv: &Path, geometry: &Path) -> Result<RegionSet> {
    let csv_text = fs::read_to_string(areal_csv).map_err(|e| Error::io(areal_csv, e))?;
    let geo_text = fs::read_to_string(geometry).map_err(|e| Error::io(geometry, e))?;
    let rows = parse_areal_csv(&csv_text, areal_csv)?;
    let mut shapes = parse_geometry(&geo_text, geometry)?;
    join(rows, &mut shapes)
}

pub fn join(rows: Vec<ArealRow>, shapes: &mut BTreeMap<String, MultiPolygon<f64>>) -> Result<RegionSet> {
    let mut records = Vec::new();
    let mut excluded = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rows {
        seen.insert(row.region_code.clone());
        let shape = shapes.remove(&row.region_code);
        let reason = match (&row.problem, &shape) {
            (Some(p), _) => Some(p.clone()),
            (None, None) => Some("missing geometry".to_string()),
            (None, Some(_)) => None,
        };
        if let Some(reason) = reason {
            log::warn!("excluding region {}: {reason}", row.region_code);
            excluded.push(Exclusion {
                region_code: row.region_code,
                reason,
            });
            continue;
        }
        let (Some(annual), Some(price), Some(boundary)) = (row.annual_surplus_kwh, row.land_price, shape) else {
            unreachable!("rows without problems carry surplus, price and geometry");
        };
        let rec = RegionRecord {
            region_code: row.region_code,
            name: row.name,
            annual_surplus_kwh: annual,
            monthly_surplus_kwh: row.monthly_surplus_kwh,
            land_price: price,
            boundary,
        };
        rec.validate()?;
        records.push(rec);
    }
    for code in shapes.keys() {
        if !seen.contains(code) {
            excluded.push(Exclusion {
                region_code: code.clone(),
                reason: "missing surplus and land price".into(),
            });
        }
    }
    excluded.sort_by(|a, b| a.region_code.cmp(&b.region_code));
    Ok(RegionSet { records, excluded })
}
