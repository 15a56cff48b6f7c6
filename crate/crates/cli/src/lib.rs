//! Command-line pipeline: region selection, terrain screening, manifests
//! and parameter sweeps driven by a TOML run configuration.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use minesite::{Error, Result};

pub use commands::{cmd_pipeline, cmd_stage1, cmd_stage2, cmd_sweep, Manifest, SweepRow};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "minesite",
    version,
    about = "Select regions and screen terrain for surplus-powered mining sites"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory; overrides `paths.out_dir`.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose the number of regions and which ones.
    Stage1(Common),
    /// Screen the selected regions for flat, permitted unit sites.
    Stage2 {
        #[command(flatten)]
        common: Common,
        /// Selection file from `stage1` (default: <out>/selection.json).
        #[arg(long, conflicts_with = "regions")]
        selection: Option<PathBuf>,
        /// Explicit comma-separated region codes.
        #[arg(long, value_delimiter = ',')]
        regions: Vec<String>,
    },
    /// Stage 1, then stage 2 on its selection, then a run manifest.
    Pipeline(Common),
    /// Re-run stage 1 over the `[sweep]` parameter range.
    Sweep(Common),
    /// Configuration helpers.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigAction {
    /// Write the default configuration (to stdout without --config).
    Init {
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Output directory recorded in the generated file.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
}

/// Process exit status for an error: 2 for I/O, 3 for internal invariant
/// violations, 1 for everything the user can fix in config or data.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        2
    } else if err.is_invariant() {
        3
    } else {
        1
    }
}

fn set_threads(n: Option<usize>) -> Result<()> {
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        // a second call in the same process keeps the first pool
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialised");
        }
    }
    Ok(())
}

fn prepare(common: &Common) -> Result<(RunConfig, PathBuf)> {
    set_threads(common.threads)?;
    let cfg = RunConfig::load(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.paths.out_dir.clone());
    Ok((cfg, out))
}

fn init_config(config: Option<&Path>, out: Option<&Path>, force: bool) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(o) = out {
        cfg.paths.out_dir = o.to_path_buf();
    }
    let text = cfg.to_toml();
    match config {
        None => print!("{text}"),
        Some(path) => {
            if path.exists() && !force {
                return Err(Error::Config(format!(
                    "{} exists; pass --force to overwrite",
                    path.display()
                )));
            }
            std::fs::write(path, text).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stage1(c) => {
            let (cfg, out) = prepare(&c)?;
            cmd_stage1(&cfg, &out).map(drop)
        }
        Command::Stage2 {
            common,
            selection,
            regions,
        } => {
            let (cfg, out) = prepare(&common)?;
            let regions = if regions.is_empty() {
                commands::read_selection(&selection.unwrap_or_else(|| out.join(commands::SELECTION)))?
            } else {
                regions
            };
            cmd_stage2(&cfg, &regions, &out).map(drop)
        }
        Command::Pipeline(c) => {
            let (cfg, out) = prepare(&c)?;
            let m = cmd_pipeline(&cfg, &out)?;
            println!(
                "pipeline: {} stages complete, manifest in {}",
                m.completed_stages(),
                out.display()
            );
            Ok(())
        }
        Command::Sweep(c) => {
            let (cfg, out) = prepare(&c)?;
            cmd_sweep(&cfg, &out).map(drop)
        }
        Command::Config {
            action:
                ConfigAction::Init {
                    config,
                    out,
                    threads,
                    force,
                },
        } => {
            set_threads(threads)?;
            init_config(config.as_deref(), out.as_deref(), force)
        }
    }
}

/// Parses arguments, runs, and maps the outcome to an exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
