use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::OUTPUT_DIR_ENV;

/// Provenance record written next to every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved arguments; `replay` accepts this object unchanged.
    pub config: serde_json::Value,
    pub rng_seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &str,
        config: &C,
        rng_seed: Option<u64>,
        outputs: Vec<PathBuf>,
        elapsed: Duration,
    ) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            rng_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
            wall_clock_seconds: elapsed.as_secs_f64(),
        })
    }

    /// Writes one manifest per output, at `<output>.manifest.json`.
    pub fn write_all(&self) -> anyhow::Result<()> {
        for out in &self.outputs {
            let path = manifest_path(out);
            let text = serde_json::to_string_pretty(self)? + "\n";
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// `explicit` if given, otherwise `default_name` inside `$XXZ_OUTPUT_DIR` (or
/// the working directory). Parent directories are created.
pub fn resolve_output(explicit: Option<&Path>, default_name: &str) -> anyhow::Result<PathBuf> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}
