use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub threads: usize,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn start(subcommand: &str, flags: &impl Serialize) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            flags: serde_json::to_value(flags).expect("flags serialize"),
            seeds: BTreeMap::new(),
            threads: rayon::current_num_threads(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            wall_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        eprintln!("{name} = {value}");
        self.seeds.insert(name.to_string(), value);
    }

    pub fn input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> std::io::Result<()> {
        self.outputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Writes the manifest to `path` and returns it.
    pub fn finish(mut self, path: PathBuf) -> std::io::Result<PathBuf> {
        if let Some(t) = self.started {
            self.wall_seconds = t.elapsed().as_secs_f64();
        }
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// `<file>.manifest.json` beside a single output file.
pub fn beside(file: &Path) -> PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    file.with_file_name(name)
}
