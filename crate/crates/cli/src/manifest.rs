//! Run manifests and atomic output files.
//!
//! Outputs are written to `<path>.partial` and renamed into place only when
//! the command succeeds, so a file without that suffix is always complete.
//! Each run then writes `<first output>.manifest.json` describing its
//! inputs, the hash of the effective config, the seed and tool versions.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

#[derive(Debug, Serialize)]
struct FileEntry {
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Versions {
    crsq: &'static str,
    annotation_log: u32,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: Vec<String>,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
    config_sha256: String,
    config: serde_json::Value,
    seed: u64,
    versions: Versions,
    timestamp_unix: u64,
}

/// Collects a run's inputs and outputs.
pub struct Run {
    command: &'static str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    pub fn new(command: &'static str) -> Self {
        Run {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Opens a buffered writer on `<path>.partial`.
    pub fn create(&mut self, path: &Path) -> io::Result<BufWriter<File>> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        self.outputs.push(path.to_path_buf());
        Ok(BufWriter::new(File::create(partial(path))?))
    }

    pub fn write(&mut self, path: &Path, contents: &[u8]) -> io::Result<()> {
        let mut w = self.create(path)?;
        w.write_all(contents)?;
        w.flush()
    }

    /// Renames every partial output into place and writes the manifest.
    pub fn finish(self, config: &Config) -> io::Result<Option<PathBuf>> {
        for out in &self.outputs {
            fs::rename(partial(out), out)?;
        }
        let Some(first) = self.outputs.first() else {
            return Ok(None);
        };
        let entries = |paths: &[PathBuf]| -> io::Result<Vec<FileEntry>> {
            paths
                .iter()
                .map(|p| {
                    Ok(FileEntry {
                        path: p.clone(),
                        sha256: sha256_file(p)?,
                    })
                })
                .collect()
        };
        let canonical = config.canonical();
        let manifest = Manifest {
            command: self.command,
            args: std::env::args().skip(1).collect(),
            inputs: entries(&self.inputs)?,
            outputs: entries(&self.outputs)?,
            config_sha256: sha256_hex(canonical.as_bytes()),
            config: serde_json::from_str(&canonical).expect("canonical config is JSON"),
            seed: config.seed,
            versions: Versions {
                crsq: env!("CARGO_PKG_VERSION"),
                annotation_log: crsq_annotation::LOG_VERSION,
            },
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let path = manifest_path(first);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(Some(path))
    }
}

pub fn partial(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
