use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// readers never see a half-written report.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "report path has no file name"))?;
    let mut tmp_name = name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `<out>/<subcommand>/<name>-<seed>.<ext>`.
pub fn report_path(out: &Path, subcommand: &str, name: &str, seed: u64, ext: &str) -> PathBuf {
    out.join(subcommand).join(format!("{name}-{seed}.{ext}"))
}

fn unix_millis() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Run metadata, kept in its own file so the reports themselves stay
/// byte-identical across reruns.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub report_paths: Vec<String>,
}

impl RunManifest {
    pub fn start(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            seed,
            started_unix_ms: unix_millis(),
            finished_unix_ms: 0,
            report_paths: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn record(&mut self, path: &Path) {
        self.report_paths.push(path.display().to_string());
    }

    /// Stamps the finish time and writes `<dir>/<stem>.manifest.json`.
    pub fn finish(mut self, dir: &Path, stem: &str) -> io::Result<PathBuf> {
        self.finished_unix_ms = unix_millis();
        let path = dir.join(format!("{stem}.manifest.json"));
        write_json(&path, &self)?;
        Ok(path)
    }
}
