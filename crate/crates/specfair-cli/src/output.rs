//! Output-directory plumbing: CSV files with an embedded config echo, JSON
//! reports, and a per-command manifest describing the produced files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use specfair::error::Result;
use specfair::io::to_json;

/// Where outputs go and what configuration produced them. Every file embeds
/// the resolved config (and its hash) for provenance.
pub struct OutputContext {
    dir: PathBuf,
    config: Value,
    hash: String,
    files: Vec<String>,
}

impl OutputContext {
    pub fn new(dir: &Path, config: Value) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let canonical = config.to_string();
        let hash = format!("{:016x}", fnv1a64(canonical.as_bytes()));
        Ok(OutputContext {
            dir: dir.to_path_buf(),
            config,
            hash,
            files: Vec::new(),
        })
    }

    pub fn config(&self) -> &Value {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV file prefixed with `#` comment lines echoing the config.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let mut text = String::new();
        text.push_str(&format!("# config_hash: {}\n", self.hash));
        text.push_str(&format!("# config: {}\n", self.config));
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        let path = self.path(name);
        fs::write(&path, text)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// Write a JSON value wrapped with the config echo.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let wrapped = json!({
            "config_hash": self.hash,
            "config": self.config,
            "data": serde_json::to_value(value)?,
        });
        let path = self.path(name);
        fs::write(&path, to_json(&wrapped)?)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// Write a JSON report as-is (the report already embeds the config).
    pub fn write_report<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, to_json(value)?)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    /// Write the plot manifest: command, axis labels, produced files.
    pub fn write_manifest(&mut self, command: &str, axes: Value) -> Result<PathBuf> {
        let manifest = json!({
            "command": command,
            "config_hash": self.hash,
            "config": self.config,
            "axes": axes,
            "files": self.files,
        });
        let path = self.path("manifest.json");
        fs::write(&path, to_json(&manifest)?)?;
        Ok(path)
    }
}

/// FNV-1a, enough to fingerprint a config echo.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
