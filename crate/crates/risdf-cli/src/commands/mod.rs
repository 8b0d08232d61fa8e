pub mod crossk;
pub mod eval;
pub mod gen_data;
pub mod report;
pub mod sweep;
pub mod train;

use anyhow::{Context, Result};
use std::path::Path;

use risdf::config::ConfigFile;

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    ConfigFile::load(path).with_context(|| format!("loading config {}", path.display()))
}

/// FNV-1a over the canonical serialized config; stable across runs.
pub fn config_hash(cfg: &ConfigFile) -> String {
    let text = cfg.to_toml();
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
