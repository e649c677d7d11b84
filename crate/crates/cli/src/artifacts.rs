//! Output directory handling: lock file, hashed outputs, run manifest.

use std::fs::{self, File, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const LOCK_FILE: &str = ".oobmm.lock";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_COPY: &str = "config.toml";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// SHA-256 of the stored config copy.
    pub config_hash: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputFile>,
}

/// An output directory held for the duration of one command. The lock file
/// is removed on drop.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
    outputs: Vec<OutputFile>,
    started: u64,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

impl OutputDir {
    pub fn acquire(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(CliError::Runtime(format!("{} is locked by another run (remove {} if stale)", root.display(), lock.display())))
            }
            Err(e) => return Err(io_err(&lock, e)),
        }
        Ok(Self { root: root.to_path_buf(), lock, outputs: Vec::new(), started: unix_now() })
    }

    /// Writes `name` and records its hash for the manifest.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.outputs.push(OutputFile { path: name.to_string(), sha256: sha256_hex(contents.as_bytes()) });
        Ok(())
    }

    /// Writes the manifest; call after every data file.
    pub fn finish(mut self, command: &str, config_text: &str, seed: u64) -> Result<RunManifest, CliError> {
        self.write(CONFIG_COPY, config_text)?;
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(config_text.as_bytes()),
            seed,
            started_unix: self.started,
            finished_unix: unix_now(),
            outputs: self.outputs.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, json + "\n").map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Reads a file that must exist (configs, stored databases).
pub fn read_text(path: &Path) -> Result<String, CliError> {
    let mut s = String::new();
    use std::io::Read;
    File::open(path).and_then(|mut f| f.read_to_string(&mut s)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(s)
}
