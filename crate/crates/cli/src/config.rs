//! Layered run configuration: compiled defaults, then a JSON config file,
//! then the FOCKBEAM_OUTDIR environment variable, then command-line flags —
//! later layers win field by field. Every run writes a manifest recording
//! the fully resolved values so outputs are reproducible from the manifest
//! alone.

use std::fs;
use std::path::{Path, PathBuf};

use fockbeam::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk config document. All fields optional; `mode`, when present, must
/// match the invoked subcommand.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: Option<u32>,
    pub mode: Option<String>,

    // chain model
    pub n: Option<usize>,
    pub v_mm_inv: Option<f64>,
    pub omega_mm_inv: Option<f64>,
    pub g1_mm_inv: Option<f64>,
    pub l0: Option<usize>,
    pub root_index: Option<usize>,
    pub drive_phase_rad: Option<f64>,

    // chain numerics
    pub t_end_mm: Option<f64>,
    pub dt_mm: Option<f64>,
    pub sample_every: Option<usize>,
    pub initial: Option<String>,

    // quasi-energy sweep
    pub g1_min_mm_inv: Option<f64>,
    pub g1_max_mm_inv: Option<f64>,
    pub g1_points: Option<usize>,

    // optics
    pub lambda_um: Option<f64>,
    pub n_s: Option<f64>,
    pub w_um: Option<f64>,
    #[serde(rename = "Dx_um")]
    pub dx_um: Option<f64>,
    pub dn_base: Option<f64>,
    pub d_min_um: Option<f64>,
    pub d_max_um: Option<f64>,
    pub d_points: Option<usize>,

    // device / bpm
    pub length_mm: Option<f64>,
    pub n_points: Option<usize>,
    pub dz_um: Option<f64>,
    pub bpm_sample_every: Option<usize>,

    // files
    pub design_path: Option<String>,
    pub calibration_path: Option<String>,
    pub out_dir: Option<String>,
    pub prefix: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("invalid config {}: {e}", path.display())))?;
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::config(format!(
                    "unsupported config schema_version {v} (expected {SCHEMA_VERSION})"
                )));
            }
        }
        Ok(cfg)
    }

    pub fn check_mode(&self, invoked: &str) -> Result<()> {
        if let Some(mode) = &self.mode {
            if mode != invoked {
                return Err(Error::config(format!(
                    "config file is for mode '{mode}' but subcommand '{invoked}' was invoked"
                )));
            }
        }
        Ok(())
    }
}

/// first Some wins: CLI flag, then config file, then default
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

/// Output directory resolution: flag > FOCKBEAM_OUTDIR > config file > ".".
pub fn resolve_out_dir(flag: Option<&str>, file: Option<&str>) -> PathBuf {
    let env = std::env::var("FOCKBEAM_OUTDIR").ok();
    let chosen = flag
        .map(str::to_owned)
        .or(env)
        .or_else(|| file.map(str::to_owned))
        .unwrap_or_else(|| ".".to_owned());
    PathBuf::from(chosen)
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::config(format!("cannot create output dir {}: {e}", dir.display())))
}

/// Run manifest: resolved inputs and produced artifacts. No timestamps, so
/// identical configs produce byte-identical manifests.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub mode: String,
    pub resolved: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(mode: &str, resolved: serde_json::Value, outputs: Vec<String>) -> Self {
        Manifest {
            tool: "fockbeam",
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            mode: mode.to_owned(),
            resolved,
            outputs,
        }
    }

    pub fn write(&self, dir: &Path, prefix: &str) -> Result<PathBuf> {
        let path = dir.join(format!("{prefix}_manifest.json"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
