//! Experiment configuration and orchestration.
//!
//! [`run_experiment`] validates a config, computes everything in memory and
//! then writes the artifacts plus a `manifest.json` listing their SHA-256
//! hashes. Reruns of the same config produce identical bytes.

pub mod config;
mod experiments;
pub mod initial;
pub mod snapshot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig, ExperimentSpec, InitialDataSpec, MocSection};
pub use experiments::{
    fit_moc_to_data, l2_difference, moc_preserve_run, ConvergenceRow, MocObserver, MocPreserveReport, SweepRow,
};
pub use initial::{generate_initial_data, multi_mode, random_band_limited, sobolev_threshold};
pub use snapshot::{read_snapshot, Snapshot, SnapshotError};

use crate::diagnostics::{linf_and_grad, FitError, RecordError};
use crate::integrator::RunError;
use crate::moc::{verify_field_moc, FieldMocCheck, Moc, MocError};
use crate::spectral::SpectralError;

/// Environment variable naming the directory that relative output paths
/// resolve against.
pub const OUTPUT_ROOT_ENV: &str = "GQG_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    /// I/O or internal failure.
    Failure,
    CertificationFailed,
    BlowUpSuspected,
    ConfigError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Failure => 1,
            ExitStatus::CertificationFailed => 2,
            ExitStatus::BlowUpSuspected => 3,
            ExitStatus::ConfigError => 4,
        }
    }

    /// Blow-up outranks certification failure, which outranks success.
    pub fn worst(self, other: ExitStatus) -> ExitStatus {
        let rank = |s: ExitStatus| match s {
            ExitStatus::Success => 0,
            ExitStatus::CertificationFailed => 1,
            ExitStatus::BlowUpSuspected => 2,
            ExitStatus::Failure => 3,
            ExitStatus::ConfigError => 4,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Moc(#[from] MocError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl HarnessError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            HarnessError::Config(_) => ExitStatus::ConfigError,
            HarnessError::Moc(
                MocError::Invalid(_) | MocError::RegimeMismatch { .. } | MocError::ParamsMismatch { .. },
            ) => ExitStatus::ConfigError,
            _ => ExitStatus::Failure,
        }
    }
}

/// Named output files, kept sorted so the manifest is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), bytes.into());
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
        s.push('\n');
        self.add(name, s);
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub status: ExitStatus,
    /// Contents of `summary.json`.
    pub summary: serde_json::Value,
    pub artifacts: Artifacts,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestEntry<'a> {
    name: &'a str,
    bytes: usize,
    sha256: String,
}

/// Runs the experiment without touching the disk (except to read a `file`
/// initial datum or modulus).
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    experiments::execute(cfg)
}

/// The root from [`OUTPUT_ROOT_ENV`], if set.
pub fn output_root_from_env() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from)
}

/// `output.dir`, joined onto `root` when relative.
pub fn output_dir(cfg: &ExperimentConfig, root: Option<&Path>) -> PathBuf {
    let dir = &cfg.output.dir;
    match root {
        Some(r) if dir.is_relative() => r.join(dir),
        _ => dir.clone(),
    }
}

/// Runs and writes every artifact plus `manifest.json` into the output
/// directory, which is returned.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    root: Option<&Path>,
) -> Result<(ExperimentOutcome, PathBuf), HarnessError> {
    let outcome = execute(cfg)?;
    let dir = output_dir(cfg, root);
    write_artifacts(&dir, &outcome, &cfg.hash())?;
    Ok((outcome, dir))
}

fn write_artifacts(dir: &Path, outcome: &ExperimentOutcome, hash: &str) -> Result<(), HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    let mut entries = Vec::new();
    for (name, bytes) in &outcome.artifacts.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io(parent))?;
        }
        std::fs::write(&path, bytes).map_err(io(&path))?;
        entries.push(ManifestEntry {
            name,
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
    let manifest = serde_json::json!({
        "config_hash": hash,
        "code_version": crate::CODE_VERSION,
        "status": outcome.status,
        "exit_code": outcome.status.code(),
        "files": entries,
    });
    let path = dir.join("manifest.json");
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(io(&path))?;
    Ok(())
}

/// Summary of a snapshot file for `gqg info`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldInfo {
    pub header: snapshot::SnapshotHeader,
    pub mean: f64,
    pub l2: f64,
    pub linf: f64,
    pub grad_linf: f64,
    pub hermitian_defect: f64,
    /// Largest `|k|` with a coefficient above `1e-14 · max|θ̂|`.
    pub effective_band: f64,
}

pub fn field_info(snap: &Snapshot) -> Result<FieldInfo, HarnessError> {
    let spec = snap.spectral()?;
    let sup = linf_and_grad(&spec)?;
    let floor = 1e-14 * spec.max_abs();
    let band = spec
        .grid()
        .modes()
        .filter(|&(a, b)| spec.get(a, b).norm() > floor)
        .map(|(a, b)| crate::spectral::wavenumber(a, b))
        .fold(0.0, f64::max);
    Ok(FieldInfo {
        header: snap.header().clone(),
        mean: spec.mean(),
        l2: spec.l2_sq().sqrt(),
        linf: sup.linf,
        grad_linf: sup.grad,
        hermitian_defect: spec.hermitian_defect(),
        effective_band: band,
    })
}

/// Reads a snapshot and a modulus in JSON form and checks one against the other.
pub fn verify_moc_files(field: &Path, moc: &Path) -> Result<FieldMocCheck, HarnessError> {
    let phys = read_snapshot(field)?.physical()?;
    let text = std::fs::read_to_string(moc).map_err(|source| HarnessError::Io {
        path: moc.to_path_buf(),
        source,
    })?;
    let m: Moc = serde_json::from_str(&text).map_err(|e| MocError::Invalid(format!("{}: {e}", moc.display())))?;
    Ok(verify_field_moc(&phys, &m))
}
