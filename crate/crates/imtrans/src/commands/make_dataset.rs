use std::path::PathBuf;

use imtrans_core::training::Task;

use super::require_out;
use crate::dataset::write_synthetic;
use crate::error::Result;
use crate::manifest::Manifest;

#[derive(Debug, Clone)]
pub struct MakeDatasetArgs {
    pub task: Task,
    pub n_train: usize,
    pub n_val: usize,
    pub size: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// Render a synthetic dataset; returns the files written.
pub fn make_dataset(args: &MakeDatasetArgs) -> Result<Vec<PathBuf>> {
    let out = require_out(args.out.as_deref(), "make-dataset")?;
    let mut manifest = Manifest::begin("make-dataset");
    manifest.setting("task", args.task);
    manifest.setting("n_train", args.n_train);
    manifest.setting("n_val", args.n_val);
    manifest.setting("size", args.size);
    manifest.setting("seed", args.seed);
    let files = write_synthetic(args.task, args.n_train, args.n_val, args.size, args.seed, &out)?;
    manifest.dataset_fingerprint = Some(crate::dataset::fingerprint(&out, &files)?);
    manifest.files = files.clone();
    manifest.finish(&out, "completed")?;
    log::info!("wrote {} images under {}", files.len(), out.display());
    Ok(files)
}
