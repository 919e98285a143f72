//! Output directory with checksummed files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
    /// Byte-identical on every run of the same config.
    pub deterministic: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact: String,
    pub version: String,
    pub config: RunConfig,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Every file of a run goes through here, so all writes stay inside `root`.
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
    started: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            entries: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8], deterministic: bool) -> Result<(), CliError> {
        assert!(
            !name.contains('/') && !name.contains(".."),
            "flat file names only"
        );
        fs::write(self.root.join(name), bytes)?;
        self.entries.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
            deterministic,
        });
        log::info!("wrote {}", self.root.join(name).display());
        Ok(())
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[String], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        self.write(name, &bytes, true)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes, true)
    }

    pub fn finish(self, config: &RunConfig) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA,
            artifact: "clusterwalk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.entries,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.root.join(MANIFEST_NAME), bytes)?;
        Ok(manifest)
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let m: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if m.schema_version != MANIFEST_SCHEMA {
        return Err(CliError::Config(format!(
            "manifest schema {} is not supported",
            m.schema_version
        )));
    }
    Ok(m)
}

/// `f64` formatting that round-trips and is stable across runs.
pub fn num(x: f64) -> String {
    format!("{x}")
}
