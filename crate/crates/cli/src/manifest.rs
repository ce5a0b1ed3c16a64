//! Reproducible run manifests: the resolved configuration, input hashes,
//! and output hashes of every CLI invocation. Replaying a manifest rebuilds
//! byte-identical outputs.

use crate::config::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sfwm_core::Result;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub artifact_version: String,
    pub subcommand: String,
    pub resolved_config: RunConfig,
    /// sha256 of input files by role (config, observations)
    pub input_hashes: std::collections::BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub outputs: Vec<OutputRecord>,
    pub cache: CacheStats,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Collects output files written by a command and the manifest itself.
pub struct RunWriter {
    pub dir: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<RunWriter> {
        std::fs::create_dir_all(dir)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    /// Writes one output file and records its hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.outputs.push(OutputRecord {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }

    /// Writes the manifest JSON alongside the outputs.
    pub fn finish(
        self,
        subcommand: &str,
        config: &RunConfig,
        input_hashes: std::collections::BTreeMap<String, String>,
        seed: Option<u64>,
        workers: Option<usize>,
        cache: CacheStats,
        wall_seconds: f64,
    ) -> Result<Manifest> {
        let manifest = Manifest {
            schema: 1,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            resolved_config: config.clone(),
            input_hashes,
            seed,
            workers,
            outputs: self.outputs,
            cache,
            wall_seconds,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}
