//! One function per CLI verb. Each returns its outputs so tests can drive the
//! commands in-process.

mod check;
mod evaluate;
mod infer;
mod make_dataset;
mod train;

use std::path::{Path, PathBuf};

use imtrans_core::data::RgbImage;
use imtrans_core::{Scalar, Tensor};

use crate::error::{CliError, Result};

pub use check::{gradcheck, receptive_field, GradcheckArgs, ReceptiveFieldArgs};
pub use evaluate::{evaluate, EvaluateArgs};
pub use infer::{infer, InferArgs};
pub use make_dataset::{make_dataset, MakeDatasetArgs};
pub use train::{train, TrainArgs, TrainOutcome};

fn require_out(out: Option<&Path>, verb: &str) -> Result<PathBuf> {
    out.map(Path::to_path_buf)
        .ok_or_else(|| CliError::Validation(format!("{verb} needs an output directory (--out)")))
}

/// Images `[C, H, W]` stacked into one `[N, C, H, W]` batch.
fn stack<T: Scalar>(images: &[Tensor<T>]) -> Result<Tensor<T>> {
    let refs: Vec<&Tensor<T>> = images.iter().collect();
    Ok(Tensor::stack(&refs)?)
}

fn to_images<T: Scalar>(batch: &Tensor<T>) -> Result<Vec<RgbImage>> {
    batch
        .unstack()
        .iter()
        .map(|t| RgbImage::from_tensor(t).map_err(CliError::from))
        .collect()
}
