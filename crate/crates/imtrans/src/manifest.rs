use std::fs;
use std::path::{Path, PathBuf};

use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::{CliError, Result};

pub const FILE_NAME: &str = "manifest.txt";

pub fn now() -> String {
    OffsetDateTime::now_utc()
        .format(&Rfc3339)
        .unwrap_or_else(|_| String::from("unknown"))
}

/// Key-value record of one command invocation and everything it wrote.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub started: String,
    pub finished: String,
    pub status: String,
    pub dataset_fingerprint: Option<String>,
    /// Resolved settings, written as `config.<key>=<value>`.
    pub config: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
}

impl Manifest {
    pub fn begin(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            started: now(),
            finished: String::new(),
            status: String::from("running"),
            dataset_fingerprint: None,
            config: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn to_text(&self, root: &Path) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &str| {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        };
        line("command", &self.command);
        line("artifact_version", concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")));
        line("started", &self.started);
        line("finished", &self.finished);
        line("status", &self.status);
        line("dataset_fingerprint", self.dataset_fingerprint.as_deref().unwrap_or("none"));
        for (k, v) in &self.config {
            line(&format!("config.{k}"), v);
        }
        for f in &self.files {
            let rel = f.strip_prefix(root).unwrap_or(f);
            line("file", &rel.to_string_lossy());
        }
        s
    }

    /// Stamp the end time and write `manifest.txt` into `root`.
    pub fn finish(mut self, root: &Path, status: &str) -> Result<PathBuf> {
        self.finished = now();
        self.status = status.to_string();
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let path = root.join(FILE_NAME);
        fs::write(&path, self.to_text(root)).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Read a manifest back as ordered `(key, value)` pairs.
pub fn parse(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// The `config.*` entries of a manifest as config-file text.
pub fn config_text(text: &str) -> String {
    parse(text)
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix("config.").map(|k| format!("{k} = {v}\n")))
        .collect()
}
