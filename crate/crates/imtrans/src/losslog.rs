use std::fs::File;
use std::path::{Path, PathBuf};

use imtrans_core::training::{LossRecord, Task};

use crate::error::{CliError, Result};

pub const PAIRED_HEADER: [&str; 5] = ["step", "gen_gan", "gen_recon", "gen_total", "disc"];
pub const UNPAIRED_HEADER: [&str; 5] = ["step", "gen_total", "cycle", "disc_a", "disc_b"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV fields of one record in the column order for `task`.
pub fn row(task: Task, r: &LossRecord) -> [String; 5] {
    match task {
        Task::Paired => [r.step.to_string(), num(r.gen_gan), num(r.gen_recon), num(r.gen_total), num(r.disc)],
        Task::Unpaired => [
            r.step.to_string(),
            num(r.gen_total),
            num(r.gen_recon),
            num(r.disc),
            num(r.disc_b.unwrap_or(f64::NAN)),
        ],
    }
}

/// Append-only loss CSV, flushed after every batch of rows.
pub struct LossLog {
    path: PathBuf,
    task: Task,
    writer: csv::Writer<File>,
}

impl LossLog {
    pub fn create(path: &Path, task: Task) -> Result<Self> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = match task {
            Task::Paired => PAIRED_HEADER,
            Task::Unpaired => UNPAIRED_HEADER,
        };
        writer.write_record(header).map_err(|e| csv_error(path, e))?;
        Ok(LossLog {
            path: path.to_path_buf(),
            task,
            writer,
        })
    }

    pub fn append(&mut self, records: &[LossRecord]) -> Result<()> {
        for r in records {
            self.writer
                .write_record(row(self.task, r))
                .map_err(|e| csv_error(&self.path, e))?;
        }
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// Parse a loss CSV back into `(header, rows)`.
pub fn read(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let values = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| CliError::format(path, format!("line {}: {e}", i + 2)))?;
        rows.push(values);
    }
    Ok((header, rows))
}
