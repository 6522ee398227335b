//! Experiment artifacts: result CSV, raw per-replication log, wall-clock
//! timings, JSON manifest and SVG plot.
//!
//! Every CSV starts with one `#` provenance line; the remaining bytes depend
//! only on the experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

pub fn provenance_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    format!("# padded-saa {} run at unix time {secs}\n", env!("CARGO_PKG_VERSION"))
}

/// Serializes `rows` to CSV text with a header row (no provenance line).
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub struct ArtifactWriter {
    dir: PathBuf,
    name: String,
    header: String,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, name: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            name: name.to_string(),
            header: provenance_line(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.name))
    }

    fn put(&mut self, suffix: &str, body: &str) -> Result<PathBuf> {
        let p = self.path(suffix);
        fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn csv<T: Serialize>(&mut self, suffix: &str, rows: &[T]) -> Result<PathBuf> {
        let body = format!("{}{}", self.header, csv_string(rows)?);
        self.put(suffix, &body)
    }

    pub fn text(&mut self, suffix: &str, body: &str) -> Result<PathBuf> {
        self.put(suffix, body)
    }

    /// Writes the manifest last so it can list every other file.
    pub fn manifest(mut self, config: &serde_json::Value) -> Result<PathBuf> {
        let files: Vec<String> = self
            .written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect();
        let m = serde_json::json!({
            "experiment": self.name,
            "provenance": self.header.trim_start_matches("# ").trim_end(),
            "solver": padded_saa::solver_backend::highs_version(),
            "workers": crate::workers::worker_count(),
            "config": config,
            "files": files,
        });
        let body = serde_json::to_string_pretty(&m)? + "\n";
        self.put("_manifest.json", &body)
    }
}
