use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use minesite::economics::build_region_plan;
use minesite::geodata::{load_raster, load_regions, Raster, RegionSet};
use minesite::stage1::{select_optimal, SelectionResult};
use minesite::stage2::{screen_region, RegionScreening, RegionSummary};
use minesite::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{resolve_field, with_field, Needs, RunConfig};
use crate::output::{
    io_err, millions, profit_curve_rows, sites_geojson, stage1_table_rows, stage2_summary_row, usd, write_csv,
    write_file, write_json, STAGE1_HEADER, STAGE2_HEADER,
};

pub const STAGE1_TABLE: &str = "stage1_table.csv";
pub const SELECTION: &str = "selection.json";
pub const PROFIT_CURVE: &str = "profit_curve.csv";
pub const STAGE2_SUMMARY: &str = "stage2_summary.csv";
pub const MANIFEST: &str = "manifest.json";
pub const SWEEP: &str = "sweep.csv";

pub fn sites_file(region_code: &str) -> String {
    format!("sites_{region_code}.geojson")
}

#[derive(Debug, Clone)]
pub struct Stage1Output {
    pub selection: SelectionResult<f64>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Stage2Output {
    pub summaries: Vec<RegionSummary>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn load_region_set(cfg: &RunConfig) -> Result<RegionSet> {
    cfg.check_inputs(Needs::Areal)?;
    load_regions(&cfg.paths.areal_csv, &cfg.paths.geometry)
}

fn exclusion_warnings(set: &RegionSet) -> Vec<String> {
    set.excluded
        .iter()
        .map(|e| format!("region {} excluded: {}", e.region_code, e.reason))
        .collect()
}

fn stage1_on(set: &RegionSet, cfg: &RunConfig, out: &Path) -> Result<Stage1Output> {
    let mut selection = select_optimal(&set.records, &cfg.economic, &cfg.stage1)?;
    selection.warnings.extend(exclusion_warnings(set));
    let table = out.join(STAGE1_TABLE);
    let sel = out.join(SELECTION);
    let curve = out.join(PROFIT_CURVE);
    write_csv(&table, &STAGE1_HEADER, &stage1_table_rows(&selection))?;
    write_json(&sel, &selection)?;
    write_csv(&curve, &["K", "pi_adj_usd"], &profit_curve_rows(&selection))?;
    println!(
        "stage1: K* = {}, regions = {}, profit = ${}M",
        selection.k_star,
        selection.regions_star.join(";"),
        millions(selection.pi_max_usd)
    );
    Ok(Stage1Output {
        selection,
        files: vec![table, sel, curve],
    })
}

/// Selects regions and writes the per-K table, selection and profit curve.
pub fn cmd_stage1(cfg: &RunConfig, out: &Path) -> Result<Stage1Output> {
    let set = load_region_set(cfg)?;
    stage1_on(&set, cfg, out)
}

/// Region codes chosen in a previously written selection file.
pub fn read_selection(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let sel: SelectionResult<f64> =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(sel.regions_star)
}

fn screen_all(
    cfg: &RunConfig,
    set: &RegionSet,
    regions: &[String],
    slope: &Raster<f32>,
    landuse: &Raster<f32>,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(Vec<RegionScreening<f32>>, Vec<String>)> {
    let bands = rayon::current_num_threads();
    let mut done = Vec::new();
    let mut warnings = Vec::new();
    for code in regions {
        let region = set
            .get(code)
            .ok_or_else(|| Error::Data(format!("region {code} is not among the loaded regions")))?;
        let plan = build_region_plan(region, &cfg.economic)?;
        if plan.n_miners == 0 {
            let w = format!("region {code}: surplus supports no machines, not screened");
            log::warn!("{w}");
            warnings.push(w);
            continue;
        }
        let res = screen_region(region, &plan, slope, landuse, &cfg.screening, bands)?;
        let path = out.join(sites_file(code));
        write_file(&path, sites_geojson(code, &cfg.output_crs, &res.initial).as_bytes())?;
        files.push(path);
        println!(
            "stage2: {code}: {} m site, {} initial, {} available",
            res.side_m,
            res.initial.len(),
            res.available.len()
        );
        done.push(res);
    }
    Ok((done, warnings))
}

fn stage2_on(
    cfg: &RunConfig,
    set: &RegionSet,
    regions: &[String],
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<Stage2Output> {
    if regions.is_empty() {
        let w = "stage2: empty selection, nothing to screen".to_string();
        log::warn!("{w}");
        return Ok(Stage2Output {
            summaries: Vec::new(),
            files: Vec::new(),
            warnings: vec![w],
        });
    }
    // both rasters load before any region is touched
    cfg.check_inputs(Needs::Rasters)?;
    let slope: Raster<f32> = load_raster(&cfg.paths.slope_raster)?;
    let landuse: Raster<f32> = load_raster(&cfg.paths.landuse_raster)?;
    slope.validate_slope()?;

    let start = files.len();
    let (done, warnings) = screen_all(cfg, set, regions, &slope, &landuse, out, files)?;
    let summary_path = out.join(STAGE2_SUMMARY);
    let rows: Vec<Vec<String>> = done.iter().map(stage2_summary_row).collect();
    write_csv(&summary_path, &STAGE2_HEADER, &rows)?;
    files.push(summary_path);
    let summaries: Vec<RegionSummary> = done.iter().map(|r| r.summary()).collect();
    let (i, a): (usize, usize) = summaries
        .iter()
        .fold((0, 0), |(i, a), s| (i + s.initial_count, a + s.available_count));
    println!(
        "stage2: total {i} initial, {a} available across {} regions",
        summaries.len()
    );
    Ok(Stage2Output {
        summaries,
        files: files[start..].to_vec(),
        warnings,
    })
}

/// Screens `regions` and writes one GeoJSON per region plus a summary CSV.
pub fn cmd_stage2(cfg: &RunConfig, regions: &[String], out: &Path) -> Result<Stage2Output> {
    let set = load_region_set(cfg)?;
    stage2_on(cfg, &set, regions, out, &mut Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub name: String,
    /// `complete`, `failed` or `not_run`.
    pub status: String,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub inputs: BTreeMap<String, FileEntry>,
    pub outputs: Vec<FileEntry>,
    /// Set when a stage failed after writing some outputs.
    pub partial: bool,
    pub stages: Vec<StageStatus>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn completed_stages(&self) -> usize {
        self.stages.iter().filter(|s| s.status == "complete").count()
    }
}

fn file_entry(path: &Path, base: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(FileEntry {
        path: path.strip_prefix(base).unwrap_or(path).display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

fn stage(name: &str, status: &str, since: Instant, error: Option<String>) -> StageStatus {
    StageStatus {
        name: name.into(),
        status: status.into(),
        elapsed_ms: since.elapsed().as_secs_f64() * 1e3,
        error,
    }
}

/// Stage 1 then stage 2 on the selected regions, followed by a run manifest.
/// A failing stage stops the run; the manifest still records what was written.
pub fn cmd_pipeline(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    cfg.check_inputs(Needs::All)?;
    let mut inputs = BTreeMap::new();
    for (role, p) in [
        ("areal_csv", &cfg.paths.areal_csv),
        ("geometry", &cfg.paths.geometry),
        ("slope_raster", &cfg.paths.slope_raster),
        ("landuse_raster", &cfg.paths.landuse_raster),
    ] {
        inputs.insert(role.to_string(), file_entry(p, Path::new(""))?);
    }
    let mut manifest = Manifest {
        config_hash: cfg.hash(),
        inputs,
        outputs: Vec::new(),
        partial: false,
        stages: Vec::new(),
        warnings: Vec::new(),
    };
    let mut files = Vec::new();
    let finish = |manifest: &mut Manifest, files: &[PathBuf]| -> Result<()> {
        manifest.outputs = files.iter().map(|f| file_entry(f, out)).collect::<Result<_>>()?;
        write_json(&out.join(MANIFEST), manifest)
    };

    let t1 = Instant::now();
    let stage1 = load_region_set(cfg).and_then(|set| stage1_on(&set, cfg, out).map(|s| (set, s)));
    let (set, s1) = match stage1 {
        Ok(v) => v,
        Err(e) => {
            manifest.stages.push(stage("stage1", "failed", t1, Some(e.to_string())));
            manifest.stages.push(stage("stage2", "not_run", Instant::now(), None));
            manifest.partial = true;
            finish(&mut manifest, &files)?;
            return Err(e);
        }
    };
    manifest.stages.push(stage("stage1", "complete", t1, None));
    files.extend(s1.files.iter().cloned());
    manifest.warnings.extend(s1.selection.warnings.iter().cloned());
    if s1.selection.pi_max_usd < 0.0 {
        let w = format!(
            "best adjusted profit is negative (${}); screening continues",
            usd(s1.selection.pi_max_usd)
        );
        log::warn!("{w}");
        manifest.warnings.push(w);
    }

    let t2 = Instant::now();
    match stage2_on(cfg, &set, &s1.selection.regions_star, out, &mut files) {
        Ok(s2) => {
            manifest.stages.push(stage("stage2", "complete", t2, None));
            manifest.warnings.extend(s2.warnings);
            finish(&mut manifest, &files)?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.stages.push(stage("stage2", "failed", t2, Some(e.to_string())));
            manifest.partial = true;
            finish(&mut manifest, &files)?;
            Err(e)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub k_star: usize,
    pub pi_max_usd: f64,
}

/// Re-runs region selection for each value of the configured sweep parameter.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep: section missing from configuration".into()))?;
    let field = resolve_field(&cfg.economic, &spec.parameter)?;
    let set = load_region_set(cfg)?;
    let mut rows = Vec::new();
    for v in spec.values() {
        let params = with_field(&cfg.economic, &field, v)?;
        let sel = select_optimal(&set.records, &params, &cfg.stage1)?;
        rows.push(SweepRow {
            param_value: v,
            k_star: sel.k_star,
            pi_max_usd: sel.pi_max_usd,
        });
    }
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![format!("{}", r.param_value), r.k_star.to_string(), usd(r.pi_max_usd)])
        .collect();
    write_csv(&out.join(SWEEP), &["param_value", "k_star", "pi_max_usd"], &table)?;
    println!("sweep: {field} over {} values", rows.len());
    Ok(rows)
}
