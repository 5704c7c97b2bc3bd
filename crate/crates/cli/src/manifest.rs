//! Run manifests: the list of produced files with their SHA-256 digests.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::config::ExperimentConfig;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    /// Everything except the wall time, for reproducibility comparisons.
    pub fn same_outputs(&self, other: &RunManifest) -> bool {
        self.schema_version == other.schema_version
            && self.code_version == other.code_version
            && self.config == other.config
            && self.seed == other.seed
            && self.files == other.files
    }
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((hex::encode(Sha256::digest(&data)), data.len() as u64))
}

/// Every regular file below `dir` except the manifest, sorted by path.
pub fn collect_files(dir: &Path) -> Result<Vec<FileEntry>> {
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir)?;
        let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
        let rel = rel.join("/");
        if rel == MANIFEST_NAME {
            continue;
        }
        let (sha256, bytes) = sha256_file(entry.path())?;
        out.push(FileEntry {
            path: rel,
            sha256,
            bytes,
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

/// Writes `manifest.json` through a temporary file and a rename.
pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(serde_json::to_string_pretty(m)?.as_bytes())?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(MANIFEST_NAME))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    Ok(serde_json::from_str(&text)?)
}

/// Creates `dir`, or empties a previous run directory when `force` is set.
/// A non-empty directory that holds no manifest is never cleared.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        if !dir.is_dir() {
            bail!("{} exists and is not a directory", dir.display());
        }
        let non_empty = fs::read_dir(dir)?.next().is_some();
        if non_empty {
            if !force {
                bail!("output directory {} is not empty (use --force to replace a previous run)", dir.display());
            }
            if !dir.join(MANIFEST_NAME).exists() {
                bail!(
                    "refusing to clear {}: it does not hold a previous run (no {MANIFEST_NAME})",
                    dir.display()
                );
            }
            fs::remove_dir_all(dir)?;
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}
