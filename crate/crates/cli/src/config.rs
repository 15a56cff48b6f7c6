use std::fs;
use std::path::{Path, PathBuf};

use minesite::economics::EconomicParams;
use minesite::stage1::Stage1Options;
use minesite::stage2::ScreeningParams;
use minesite::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub areal_csv: PathBuf,
    pub geometry: PathBuf,
    pub slope_raster: PathBuf,
    pub landuse_raster: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_crs() -> String {
    "EPSG:5186".into()
}

/// One-parameter sensitivity sweep over `steps` evenly spaced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Dotted field path into the economic block, e.g. `cost.fixed_opex_per_site_usd`.
    pub parameter: String,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.end
                } else {
                    self.start + (self.end - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// CRS name written into emitted GeoJSON.
    #[serde(default = "default_crs")]
    pub output_crs: String,
    pub paths: Paths,
    #[serde(default)]
    pub economic: EconomicParams<f64>,
    #[serde(default)]
    pub screening: ScreeningParams<f32>,
    #[serde(default)]
    pub stage1: Stage1Options,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_crs: default_crs(),
            paths: Paths {
                areal_csv: "data/areal.csv".into(),
                geometry: "data/regions.geojson".into(),
                slope_raster: "data/slope.tif".into(),
                landuse_raster: "data/landuse.tif".into(),
                out_dir: default_out_dir(),
            },
            economic: EconomicParams::default(),
            screening: ScreeningParams::default(),
            stage1: Stage1Options::default(),
            sweep: None,
        }
    }
}

/// Inputs a command needs on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Areal,
    Rasters,
    All,
}

impl RunConfig {
    /// Parses TOML text; relative paths are taken relative to `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in [
            &mut cfg.paths.areal_csv,
            &mut cfg.paths.geometry,
            &mut cfg.paths.slope_raster,
            &mut cfg.paths.landuse_raster,
            &mut cfg.paths.out_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.economic.validate()?;
        self.screening.validate()?;
        if self.stage1.k_max < 1 {
            return Err(Error::Config("stage1.k_max = 0: must be >= 1".into()));
        }
        if self.stage1.prefilter < 1 {
            return Err(Error::Config("stage1.prefilter = 0: must be >= 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.steps < 2 {
                return Err(Error::Config(format!("sweep.steps = {}: must be >= 2", s.steps)));
            }
            if !s.start.is_finite() || !s.end.is_finite() {
                return Err(Error::Config("sweep.start and sweep.end must be finite".into()));
            }
            resolve_field(&self.economic, &s.parameter)?;
        }
        Ok(())
    }

    /// Checks that the input files a command reads exist.
    pub fn check_inputs(&self, needs: Needs) -> Result<()> {
        let p = &self.paths;
        let mut list = Vec::new();
        if needs != Needs::Rasters {
            list.push(("paths.areal_csv", &p.areal_csv));
            list.push(("paths.geometry", &p.geometry));
        }
        if needs != Needs::Areal {
            list.push(("paths.slope_raster", &p.slope_raster));
            list.push(("paths.landuse_raster", &p.landuse_raster));
        }
        for (field, path) in list {
            if !path.is_file() {
                return Err(Error::Io {
                    path: path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, format!("{field}: file not found")),
                });
            }
        }
        Ok(())
    }

    /// SHA-256 of the parsed configuration; formatting and comments in the
    /// source file do not affect it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

fn numeric_leaves(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                numeric_leaves(&path, child, out);
            }
        }
        Value::Number(_) => out.push(prefix.to_string()),
        _ => {}
    }
}

/// Dotted names of every numeric economic parameter.
pub fn sweepable_fields(params: &EconomicParams<f64>) -> Vec<String> {
    let mut out = Vec::new();
    numeric_leaves("", &serde_json::to_value(params).expect("params serialize"), &mut out);
    out
}

/// Accepts a full dotted path or an unambiguous leaf name.
pub fn resolve_field(params: &EconomicParams<f64>, name: &str) -> Result<String> {
    let fields = sweepable_fields(params);
    if fields.iter().any(|f| f == name) {
        return Ok(name.to_string());
    }
    let suffix = format!(".{name}");
    let hits: Vec<&String> = fields.iter().filter(|f| f.ends_with(&suffix)).collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        _ => Err(Error::Config(format!(
            "sweep.parameter = {name:?} is not a sweepable field; expected one of: {}",
            fields.join(", ")
        ))),
    }
}

/// Copy of `params` with one numeric field replaced.
pub fn with_field(params: &EconomicParams<f64>, name: &str, value: f64) -> Result<EconomicParams<f64>> {
    let field = resolve_field(params, name)?;
    let mut v = serde_json::to_value(params).expect("params serialize");
    let mut slot = &mut v;
    for key in field.split('.') {
        slot = slot.get_mut(key).expect("resolved field exists");
    }
    *slot = if slot.is_u64() {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(Error::Config(format!(
                "{field} = {value}: must be a non-negative integer"
            )));
        }
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| Error::Config(format!("{field} = {value}: not a finite number")))?
    };
    let out: EconomicParams<f64> = serde_json::from_value(v).map_err(|e| Error::Config(format!("{field}: {e}")))?;
    out.validate()?;
    Ok(out)
}
