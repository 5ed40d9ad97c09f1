//! File emission: CSV formatting, atomic writes and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// 17 significant digits, `.` separator, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with one header row. Cells are written verbatim.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Writes `contents` to a temporary file in the target directory, then
/// renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// `<dir>/<stem><suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, parameters: BTreeMap<String, Value>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            timestamp: 0,
        }
    }

    /// Writes a data file and records it.
    pub fn emit(&mut self, path: &Path, contents: &str) -> Result<()> {
        write_atomic(path, contents)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Stamps the wall-clock time and writes `<stem>.manifest.json` beside
    /// `primary`. Call after every data file has been emitted.
    pub fn finish(mut self, primary: &Path) -> Result<PathBuf> {
        self.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let path = sibling(primary, ".manifest.json");
        write_atomic(&path, &json(&self)?)?;
        Ok(path)
    }
}
