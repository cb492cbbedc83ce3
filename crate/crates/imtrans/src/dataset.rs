use std::fs;
use std::path::{Path, PathBuf};

use imtrans_core::data::{synthetic_paired, synthetic_unpaired, Dataset, Domain, ImageSet, RgbImage, Split};
use imtrans_core::training::Task;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::png_io::{list_pngs, read_png, write_png};

/// On-disk arrangement of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `<root>/<split>/*.png`, each `2S x S` with the input left and target right.
    SideBySide,
    /// `<root>/<split>A/*.png` and `<root>/<split>B/*.png`, unpaired.
    TwoDirs,
}

impl Layout {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Paired => Layout::SideBySide,
            Task::Unpaired => Layout::TwoDirs,
        }
    }
}

/// A dataset read from disk with the files it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset<f64>,
    pub files: Vec<PathBuf>,
    pub fingerprint: String,
}

fn load_dir(dir: &Path) -> Result<(Vec<RgbImage>, Vec<PathBuf>)> {
    let files = list_pngs(dir)?;
    let mut images = Vec::with_capacity(files.len());
    for f in &files {
        images.push(read_png(f)?);
    }
    Ok((images, files))
}

fn check_uniform(images: &[RgbImage], files: &[PathBuf]) -> Result<()> {
    if let Some(first) = images.first() {
        for (img, f) in images.iter().zip(files) {
            if (img.width, img.height) != (first.width, first.height) {
                return Err(CliError::format(
                    f,
                    format!(
                        "image is {}x{}, expected {}x{} like {}",
                        img.width,
                        img.height,
                        first.width,
                        first.height,
                        files[0].display()
                    ),
                ));
            }
        }
    }
    Ok(())
}

pub fn load_dataset(root: &Path, layout: Layout, split: Split) -> Result<Loaded> {
    let core = |e: imtrans_core::Error| CliError::format(root, e.to_string());
    let (dataset, files) = match layout {
        Layout::SideBySide => {
            let (joined, files) = load_dir(&root.join(split.as_str()))?;
            check_uniform(&joined, &files)?;
            let mut inputs = Vec::with_capacity(joined.len());
            let mut targets = Vec::with_capacity(joined.len());
            for (img, f) in joined.iter().zip(&files) {
                let (a, b) = img.split_halves().map_err(|e| CliError::format(f, e.to_string()))?;
                inputs.push(a);
                targets.push(b);
            }
            let a = ImageSet::from_rgb(&inputs, Domain::A, split).map_err(core)?;
            let b = ImageSet::from_rgb(&targets, Domain::B, split).map_err(core)?;
            (Dataset::aligned(a, b).map_err(core)?, files)
        }
        Layout::TwoDirs => {
            let (a, mut files) = load_dir(&root.join(format!("{split}A")))?;
            let (b, files_b) = load_dir(&root.join(format!("{split}B")))?;
            files.extend(files_b);
            let all: Vec<RgbImage> = a.iter().chain(&b).cloned().collect();
            check_uniform(&all, &files)?;
            let a = ImageSet::from_rgb(&a, Domain::A, split).map_err(core)?;
            let b = ImageSet::from_rgb(&b, Domain::B, split).map_err(core)?;
            (Dataset::unpaired(a, b).map_err(core)?, files)
        }
    };
    let fingerprint = fingerprint(root, &files)?;
    Ok(Loaded {
        dataset,
        files,
        fingerprint,
    })
}

/// SHA-256 over each file's path relative to `root` and its bytes.
pub fn fingerprint(root: &Path, files: &[PathBuf]) -> Result<String> {
    let mut hasher = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(root).unwrap_or(f);
        let name = rel.to_string_lossy();
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        let bytes = fs::read(f).map_err(|e| CliError::io(f, e))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex(&hasher.finalize()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Render a synthetic dataset under `out` in the layout of `task`. The
/// validation split uses a seed derived from `seed`. Returns the files written.
pub fn write_synthetic(task: Task, n_train: usize, n_val: usize, size: usize, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let val_seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    let mut written = Vec::new();
    for (split, n, seed) in [(Split::Train, n_train, seed), (Split::Val, n_val, val_seed)] {
        match task {
            Task::Paired => {
                for (i, (a, b)) in synthetic_paired(n, size, seed)?.iter().enumerate() {
                    let path = out.join(split.as_str()).join(format!("{i:05}.png"));
                    write_png(&path, &RgbImage::side_by_side(a, b)?)?;
                    written.push(path);
                }
            }
            Task::Unpaired => {
                let (a, b) = synthetic_unpaired(n, n, size, seed)?;
                for (domain, images) in [("A", a), ("B", b)] {
                    for (i, img) in images.iter().enumerate() {
                        let path = out.join(format!("{split}{domain}")).join(format!("{i:05}.png"));
                        write_png(&path, img)?;
                        written.push(path);
                    }
                }
            }
        }
    }
    Ok(written)
}
