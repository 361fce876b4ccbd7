//! Output directories, manifests and batch execution.

use crate::commands::{execute, Artifact};
use crate::config::{ExperimentConfig, SubcommandId};
use crate::error::{CliError, EXIT_NUMERIC, EXIT_OK};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

/// Environment variable holding the default output root.
pub const OUT_ROOT_ENV: &str = "WICKLAB_OUT";
/// Output root when the environment variable is unset.
pub const DEFAULT_OUT_ROOT: &str = "wicklab-out";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const CONFIG_NAME: &str = "config.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one run, written as `manifest.json` beside the artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub subcommand: SubcommandId,
    pub seed: u64,
    /// SHA-256 of the compact JSON of the config without its output path.
    pub config_sha256: String,
    pub status: RunStatus,
    pub wall_time_seconds: f64,
    pub output_dir: PathBuf,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => EXIT_OK,
            RunStatus::Diverged => EXIT_NUMERIC,
        }
    }

    /// Config hash and file checksums, the parts fixed by config and seed.
    pub fn checksums(&self) -> (String, Vec<(String, String)>) {
        (
            self.config_sha256.clone(),
            self.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect(),
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Config as recorded in the output: output path dropped, seed made explicit.
pub fn canonical_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig { seed: Some(cfg.effective_seed()), out: None, ..cfg.clone() }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(&canonical_config(cfg)).expect("configs serialize"))
}

pub fn default_out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

/// `cfg.out`, else `<root>/<subcommand>-<hash prefix>`.
pub fn resolve_out_dir(cfg: &ExperimentConfig, root: &Path) -> PathBuf {
    match &cfg.out {
        Some(p) => p.clone(),
        None => root.join(format!("{}-{}", cfg.subcommand, &config_hash(cfg)[..12])),
    }
}

/// Runs one experiment into its output directory.
///
/// The config is validated before anything touches the filesystem. Files are
/// written to a sibling staging directory that is renamed into place; on any
/// write failure the staging directory is removed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    run_experiment_in(cfg, &default_out_root())
}

pub fn run_experiment_in(cfg: &ExperimentConfig, root: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let exp = cfg.parse()?;
    let seed = cfg.effective_seed();
    let out_dir = resolve_out_dir(cfg, root);
    check_target(&out_dir)?;
    let output = execute(&exp, seed)?;
    let mut files = vec![Artifact {
        name: CONFIG_NAME.into(),
        bytes: format!("{}\n", canonical_config(cfg).to_json()).into_bytes(),
    }];
    files.extend(output.files);
    let entries: Vec<FileEntry> = files
        .iter()
        .map(|a| FileEntry { path: a.name.clone(), sha256: sha256_hex(&a.bytes), bytes: a.bytes.len() as u64 })
        .collect();
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cfg.subcommand,
        seed,
        config_sha256: config_hash(cfg),
        status: if output.diverged { RunStatus::Diverged } else { RunStatus::Ok },
        wall_time_seconds: start.elapsed().as_secs_f64(),
        output_dir: out_dir.clone(),
        files: entries,
    };
    write_staged(&out_dir, &files, &manifest)?;
    Ok(manifest)
}

/// An existing target must be empty or a previous run.
fn check_target(dir: &Path) -> Result<(), CliError> {
    if !dir.exists() {
        return Ok(());
    }
    if !dir.is_dir() {
        return Err(CliError::Io(format!("{} exists and is not a directory", dir.display())));
    }
    let empty = fs::read_dir(dir)?.next().is_none();
    if empty || dir.join(MANIFEST_NAME).is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{} exists and does not hold a previous run", dir.display())))
    }
}

static STAGING_COUNTER: AtomicUsize = AtomicUsize::new(0);

fn staging_dir(out_dir: &Path) -> PathBuf {
    let name = out_dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    let tag = format!(".{name}.staging-{}-{}", std::process::id(), STAGING_COUNTER.fetch_add(1, Ordering::Relaxed));
    match out_dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.join(tag),
        _ => PathBuf::from(tag),
    }
}

fn write_staged(out_dir: &Path, files: &[Artifact], manifest: &RunManifest) -> Result<(), CliError> {
    if let Some(parent) = out_dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let staging = staging_dir(out_dir);
    let result = (|| -> Result<(), CliError> {
        fs::create_dir(&staging)?;
        for a in files {
            fs::write(staging.join(&a.name), &a.bytes)?;
        }
        let mut m = serde_json::to_vec_pretty(manifest).expect("manifests serialize");
        m.push(b'\n');
        fs::write(staging.join(MANIFEST_NAME), m)?;
        check_target(out_dir)?;
        if out_dir.exists() {
            fs::remove_dir_all(out_dir)?;
        }
        fs::rename(&staging, out_dir)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&staging);
    }
    result
}

/// Result of one config in a batch.
#[derive(Debug)]
pub struct BatchItem {
    pub config: PathBuf,
    pub result: Result<RunManifest, CliError>,
}

impl BatchItem {
    pub fn exit_code(&self) -> i32 {
        match &self.result {
            Ok(m) => m.exit_code(),
            Err(e) => e.exit_code(),
        }
    }
}

/// Configs of a batch directory: its `*.json` files in name order.
pub fn batch_configs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Config(format!("no *.json configs in {}", dir.display())));
    }
    Ok(paths)
}

/// Command-line overrides applied to every config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Loads one config and applies the overrides; in batch mode `out` is a
/// root and each run writes to `<root>/<config stem>` unless its config
/// names a directory.
pub fn load_config(path: &Path, ov: &Overrides, batch: bool) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(seed) = ov.seed {
        cfg.seed = Some(seed);
    }
    if batch {
        if cfg.out.is_none() {
            let root = ov.out.clone().unwrap_or_else(default_out_root);
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            cfg.out = Some(root.join(stem));
        }
    } else if let Some(out) = &ov.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

/// Runs every config of `dir` concurrently; results keep the name order.
pub fn run_batch(dir: &Path, ov: &Overrides) -> Result<Vec<BatchItem>, CliError> {
    let paths = batch_configs(dir)?;
    Ok(paths
        .into_par_iter()
        .map(|config| {
            let result = load_config(&config, ov, true).and_then(|cfg| run_experiment(&cfg));
            BatchItem { config, result }
        })
        .collect())
}

/// Worst exit code of a batch: IO over numeric over config errors.
pub fn batch_exit_code(items: &[BatchItem]) -> i32 {
    items.iter().map(BatchItem::exit_code).max().unwrap_or(EXIT_OK)
}
