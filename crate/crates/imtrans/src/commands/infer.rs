use std::path::PathBuf;

use imtrans_core::autograd::Mode;
use imtrans_core::models::Network;
use imtrans_core::training::Precision;
use imtrans_core::{RngStream, Scalar};

use super::{require_out, stack, to_images};
use crate::checkpoint::Checkpoint;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::png_io::{list_pngs, read_png, write_png};

#[derive(Debug, Clone)]
pub struct InferArgs {
    pub checkpoint: PathBuf,
    /// A PNG file or a directory of them.
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub generator: String,
}

/// Translate each input image into `<out>/<same file name>`. Images are
/// processed in name order from one dropout stream seeded by `seed`.
pub fn infer(args: &InferArgs) -> Result<Vec<PathBuf>> {
    let out = require_out(args.out.as_deref(), "infer")?;
    let ckpt = Checkpoint::read(&args.checkpoint)?;
    let net = ckpt.generator(&args.generator)?;
    if net.spec().in_channels != 3 {
        return Err(CliError::Validation(format!(
            "checkpoint generator expects {} input channels, images have 3",
            net.spec().in_channels
        )));
    }
    let inputs = if args.input.is_dir() {
        list_pngs(&args.input)?
    } else {
        vec![args.input.clone()]
    };
    if inputs.is_empty() {
        return Err(CliError::Validation(format!("no PNG files in {}", args.input.display())));
    }
    let mut manifest = Manifest::begin("infer");
    manifest.setting("checkpoint", args.checkpoint.display());
    manifest.setting("input", args.input.display());
    manifest.setting("seed", args.seed);
    manifest.setting("generator", &args.generator);
    manifest.dataset_fingerprint = Some(crate::dataset::fingerprint(
        if args.input.is_dir() { &args.input } else { args.input.parent().unwrap_or(&args.input) },
        &inputs,
    )?);
    let written = match ckpt.config.precision {
        Precision::F32 => translate_files::<f32>(net, &inputs, &out, args.seed)?,
        Precision::F64 => translate_files::<f64>(net, &inputs, &out, args.seed)?,
    };
    manifest.files = written.clone();
    manifest.finish(&out, "completed")?;
    Ok(written)
}

fn translate_files<T: Scalar>(net: &Network<f64>, inputs: &[PathBuf], out: &std::path::Path, seed: u64) -> Result<Vec<PathBuf>> {
    let mut gen: Network<T> = net.cast();
    gen.set_mode(Mode::Eval);
    let mut rng = RngStream::new(seed);
    let mut written = Vec::with_capacity(inputs.len());
    for path in inputs {
        let img = read_png(path)?;
        let fake = gen
            .infer(&stack(&[img.to_tensor::<T>()])?, &mut rng)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let name = path.file_name().expect("listed files have names");
        let target = out.join(name);
        write_png(&target, &to_images(&fake)?[0])?;
        written.push(target);
    }
    Ok(written)
}
