use std::fs;
use std::path::{Path, PathBuf};

use imtrans_core::autograd::Mode;
use imtrans_core::data::Split;
use imtrans_core::metrics::{fid, gaussian_stats, precision_recall, Embedder, FeatureSet, RandomProjection, Report, Source};
use imtrans_core::models::Network;
use imtrans_core::training::Precision;
use imtrans_core::{RngStream, Scalar, Tensor};
use sha2::{Digest, Sha256};

use super::stack;
use crate::checkpoint::Checkpoint;
use crate::dataset::{load_dataset, Layout};
use crate::error::{CliError, Result};
use crate::manifest::Manifest;

const CHUNK: usize = 16;

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub checkpoint: Option<PathBuf>,
    /// Defaults to the dataset named in the checkpoint's config.
    pub dataset: Option<PathBuf>,
    pub split: Split,
    pub k: usize,
    /// Images per set; defaults to 256, or every row of an embedding file.
    pub n: Option<usize>,
    /// `(generated, real)` feature files replacing the embedded images.
    pub embedding_files: Option<(PathBuf, PathBuf)>,
    /// Compare the real set with itself instead of generated images.
    pub self_eval: bool,
    /// Dropout stream of the generator.
    pub seed: u64,
    /// Projection seed; defaults to `seed`.
    pub embed_seed: Option<u64>,
    /// `a` translates domain A to B, `b` the reverse (unpaired checkpoints only).
    pub generator: String,
    pub out: Option<PathBuf>,
}

impl Default for EvaluateArgs {
    fn default() -> Self {
        EvaluateArgs {
            checkpoint: None,
            dataset: None,
            split: Split::Val,
            k: 3,
            n: None,
            embedding_files: None,
            self_eval: false,
            seed: 0,
            embed_seed: None,
            generator: String::from("a"),
            out: None,
        }
    }
}

pub const DEFAULT_N: usize = 256;

fn read_features(path: &Path, source: Source) -> Result<FeatureSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    FeatureSet::parse(&text, source).map_err(|e| CliError::format(path, e.to_string()))
}

fn take(set: FeatureSet, n: Option<usize>, what: &str) -> Result<FeatureSet> {
    match n {
        None => Ok(set),
        Some(n) if n <= set.len() => Ok(set.truncated(n)),
        Some(n) => Err(CliError::Validation(format!("--n {n} exceeds the {} {what} available", set.len()))),
    }
}

/// Translate `inputs` in chunks with dropout on and batchnorm in inference mode.
pub fn generate<T: Scalar>(net: &Network<f64>, inputs: &[Tensor<f64>], seed: u64) -> Result<Vec<Tensor<f64>>> {
    let mut gen: Network<T> = net.cast();
    gen.set_mode(Mode::Eval);
    let mut rng = RngStream::new(seed);
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(CHUNK) {
        let batch: Vec<Tensor<T>> = chunk.iter().map(Tensor::cast).collect();
        let fake = gen.infer(&stack(&batch)?, &mut rng)?;
        out.extend(fake.unstack().iter().map(Tensor::cast));
    }
    Ok(out)
}

/// Compute precision, recall and FID, print the report and, given `out`,
/// write it to `report.txt`.
pub fn evaluate(args: &EvaluateArgs) -> Result<Report> {
    if args.k == 0 {
        return Err(CliError::Validation("--k must be at least 1".into()));
    }
    let embed_seed = args.embed_seed.unwrap_or(args.seed);
    let mut manifest = Manifest::begin("evaluate");
    let mut fingerprint = vec![(String::from("covariance_divisor"), String::from("n-1"))];
    let (generated, real, embedder) = match &args.embedding_files {
        Some((gen_path, real_path)) => {
            let real = take(read_features(real_path, Source::Real)?, args.n, "real feature rows")?;
            let generated = if args.self_eval {
                FeatureSet::new(real.dim(), real.rows().flatten().copied().collect(), Source::Generated)?
            } else {
                take(read_features(gen_path, Source::Generated)?, args.n, "generated feature rows")?
            };
            fingerprint.push(("generated_features".into(), gen_path.display().to_string()));
            fingerprint.push(("real_features".into(), real_path.display().to_string()));
            (generated, real, String::from("external"))
        }
        None => {
            let ckpt_path = args
                .checkpoint
                .as_ref()
                .ok_or_else(|| CliError::Validation("evaluate needs --checkpoint or --embedding-file".into()))?;
            let bytes = fs::read(ckpt_path).map_err(|e| CliError::io(ckpt_path, e))?;
            let ckpt = Checkpoint::from_bytes(&bytes).map_err(|e| CliError::format(ckpt_path, e))?;
            let root = match &args.dataset {
                Some(d) => d.clone(),
                None => PathBuf::from(&ckpt.config.dataset),
            };
            let loaded = load_dataset(&root, Layout::for_task(ckpt.config.task), args.split)?;
            let (a, b) = loaded.dataset.domains();
            let (inputs, reals) = match args.generator.as_str() {
                "b" => (b, a),
                _ => (a, b),
            };
            let n = args.n.unwrap_or(DEFAULT_N);
            if n > reals.len() || n > inputs.len() {
                return Err(CliError::Validation(format!(
                    "--n {n} exceeds the available images ({} inputs, {} real) in the {} split",
                    inputs.len(),
                    reals.len(),
                    args.split
                )));
            }
            if n < 2 {
                return Err(CliError::Validation("--n must be at least 2".into()));
            }
            let real_images = &reals.images()[..n];
            let shape = reals.image_shape().unwrap_or(&[]);
            let projection = RandomProjection::new(shape.iter().product(), RandomProjection::DEFAULT_DIM, embed_seed)?;
            let real = projection.embed_all(real_images, Source::Real)?;
            let generated = if args.self_eval {
                projection.embed_all(real_images, Source::Generated)?
            } else {
                let net = ckpt.generator(&args.generator)?;
                let fakes = match ckpt.config.precision {
                    Precision::F32 => generate::<f32>(net, &inputs.images()[..n], args.seed)?,
                    Precision::F64 => generate::<f64>(net, &inputs.images()[..n], args.seed)?,
                };
                projection.embed_all(&fakes, Source::Generated)?
            };
            fingerprint.push(("checkpoint_sha256".into(), format!("{:x}", Sha256::digest(&bytes))));
            fingerprint.push(("dataset_fingerprint".into(), loaded.fingerprint.clone()));
            fingerprint.push(("split".into(), args.split.to_string()));
            fingerprint.push(("generator".into(), args.generator.clone()));
            manifest.dataset_fingerprint = Some(loaded.fingerprint);
            (generated, real, projection.name())
        }
    };
    fingerprint.push(("self_eval".into(), args.self_eval.to_string()));
    if generated.dim() != real.dim() {
        return Err(CliError::Validation(format!(
            "generated features have dimension {}, real features {}",
            generated.dim(),
            real.dim()
        )));
    }
    let (precision, recall) = precision_recall(&generated, &real, args.k)?;
    let distance = fid(&gaussian_stats(&real)?, &gaussian_stats(&generated)?)?;
    let report = Report {
        precision,
        recall,
        fid: distance,
        k: args.k,
        embedder,
        n: generated.len(),
        seed: args.seed,
        fingerprint,
    };
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = &args.out {
        let path = out.join("report.txt");
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                manifest.setting(k, v);
            }
        }
        manifest.files.push(path);
        manifest.finish(out, "completed")?;
    }
    Ok(report)
}
