use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use yieldlag::ingest::write_atomic;
use yieldlag::Result;

use crate::Command;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_ms: u128,
}

/// SHA-256 of the command, its arguments and the seed, as compact JSON.
pub fn config_hash(command: &Command, seed: u64) -> String {
    #[derive(Serialize)]
    struct Keyed<'a> {
        command: &'a Command,
        seed: u64,
    }
    let bytes = serde_json::to_vec(&Keyed { command, seed }).expect("command serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(&dir.join("manifest.json"), &bytes)
    }
}
