use std::fs;
use std::path::{Path, PathBuf};

use imtrans_core::data::{Dataset, RgbImage, Split};
use imtrans_core::training::{LossRecord, Precision, Task, TrainConfig, TrainState};
use imtrans_core::{Error as CoreError, RngStream, Scalar, Tensor};

use super::{stack, to_images};
use crate::checkpoint::Checkpoint;
use crate::dataset::{load_dataset, Layout, Loaded};
use crate::error::{CliError, Result};
use crate::losslog::LossLog;
use crate::manifest::Manifest;

const SAMPLE_SALT: u64 = 0x5341_4d50_4c45_5321;

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dataset: Option<PathBuf>,
    pub epochs: Option<u64>,
    /// Continue from a checkpoint whose config matches apart from `epochs` and `output`.
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out: PathBuf,
    pub config: TrainConfig,
    /// Every file written, the manifest last.
    pub files: Vec<PathBuf>,
    pub last: Option<LossRecord>,
}

fn read_config(args: &TrainArgs) -> Result<TrainConfig> {
    let text = fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = TrainConfig::from_text(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = out.to_string_lossy().into_owned();
    }
    if let Some(dataset) = &args.dataset {
        config.dataset = dataset.to_string_lossy().into_owned();
    }
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    config
        .validate()
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.config.display())))?;
    if config.output.is_empty() {
        return Err(CliError::Validation("no output directory (set `output` or pass --out)".into()));
    }
    if config.dataset.is_empty() {
        return Err(CliError::Validation("no dataset (set `dataset` or pass --dataset)".into()));
    }
    Ok(config)
}

fn check_resume(config: &TrainConfig, ckpt: &Checkpoint) -> Result<()> {
    let mut stored = ckpt.config.clone();
    stored.epochs = config.epochs;
    stored.output = config.output.clone();
    if &stored != config {
        let differing: Vec<String> = stored
            .entries()
            .into_iter()
            .zip(config.entries())
            .filter(|(a, b)| a != b)
            .map(|((k, a), (_, b))| format!("{k}: checkpoint {a}, config {b}"))
            .collect();
        return Err(CoreError::SpecMismatch(format!("resume config differs: {}", differing.join("; "))).into());
    }
    if ckpt.epoch > config.epochs {
        return Err(CliError::Validation(format!(
            "checkpoint is at epoch {}, beyond the configured {} epochs",
            ckpt.epoch, config.epochs
        )));
    }
    Ok(())
}

/// Train as configured, writing `config.txt`, `losses.csv`, checkpoints,
/// sample grids and finally `manifest.txt` under the output directory. Nothing
/// is written unless the config, dataset and resume checkpoint are all valid.
pub fn train(args: &TrainArgs) -> Result<TrainOutcome> {
    let config = read_config(args)?;
    let loaded = load_dataset(Path::new(&config.dataset), Layout::for_task(config.task), Split::Train)?;
    let expected = [config.channels, config.image_size, config.image_size];
    if loaded.dataset.image_shape() != Some(&expected[..]) {
        return Err(CliError::Validation(format!(
            "dataset images have shape {:?}, config expects {expected:?}",
            loaded.dataset.image_shape().unwrap_or(&[])
        )));
    }
    let resume = match &args.resume {
        Some(path) => {
            let ckpt = Checkpoint::read(path)?;
            check_resume(&config, &ckpt)?;
            Some(ckpt)
        }
        None => None,
    };
    match config.precision {
        Precision::F32 => run::<f32>(config, &loaded, resume),
        Precision::F64 => run::<f64>(config, &loaded, resume),
    }
}

fn run<T: Scalar>(config: TrainConfig, loaded: &Loaded, resume: Option<Checkpoint>) -> Result<TrainOutcome> {
    let mut state: TrainState<T> = match &resume {
        Some(ckpt) => ckpt.to_state_with(config.clone())?,
        None => TrainState::new(config.clone())?,
    };
    let dataset: Dataset<T> = loaded.dataset.cast();
    let out = PathBuf::from(&config.output);
    let mut manifest = Manifest::begin("train");
    manifest.dataset_fingerprint = Some(loaded.fingerprint.clone());
    for (k, v) in config.entries() {
        manifest.setting(k, v);
    }
    if let Some(ckpt) = &resume {
        manifest.setting("resumed_from_epoch", ckpt.epoch);
    }

    let result = run_epochs(&mut state, &dataset, &out, &mut manifest.files);
    let status = match &result {
        Ok(_) => String::from("completed"),
        Err(e) => format!("aborted: {e}"),
    };
    let mut files = manifest.files.clone();
    files.push(manifest.finish(&out, &status)?);
    let last = result?;
    Ok(TrainOutcome {
        out,
        config,
        files,
        last,
    })
}

fn run_epochs<T: Scalar>(
    state: &mut TrainState<T>,
    dataset: &Dataset<T>,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<Option<LossRecord>> {
    let config = state.config().clone();
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let config_path = out.join("config.txt");
    fs::write(&config_path, config.to_text()).map_err(|e| CliError::io(&config_path, e))?;
    files.push(config_path);
    let csv_path = out.join("losses.csv");
    let mut log = LossLog::create(&csv_path, config.task)?;
    files.push(csv_path);

    let mut last = None;
    while state.epoch() < config.epochs {
        let records = match state.run_epoch(dataset) {
            Ok(r) => r,
            Err(e @ CoreError::NonFinite { .. }) => {
                return Err(CliError::Numeric(format!("training diverged: {e}")));
            }
            Err(e) => return Err(e.into()),
        };
        log.append(&records)?;
        let epoch = state.epoch();
        if let Some(r) = records.last() {
            log::info!(
                "epoch {epoch}/{} step {} gen_total {:.6} recon {:.6} disc {:.6}",
                config.epochs,
                r.step,
                r.gen_total,
                r.gen_recon,
                r.disc
            );
            last = Some(*r);
        }
        let final_epoch = epoch == config.epochs;
        if final_epoch || (config.checkpoint_every > 0 && epoch.is_multiple_of(config.checkpoint_every)) {
            let path = out.join("checkpoints").join(format!("epoch_{epoch:04}.ckpt"));
            Checkpoint::from_state(state).write(&path)?;
            files.push(path);
        }
        if config.samples > 0
            && config.sample_every > 0
            && (final_epoch || epoch.is_multiple_of(config.sample_every))
        {
            let path = out.join("samples").join(format!("epoch_{epoch:04}.png"));
            crate::png_io::write_png(&path, &sample_grid(state, dataset)?)?;
            files.push(path);
        }
    }
    Ok(last)
}

/// One row per sample: input | target | generated for paired runs, input |
/// translated | reconstructed for unpaired ones. Uses its own stream, so the
/// training trajectory does not depend on whether samples are drawn.
pub fn sample_grid<T: Scalar>(state: &TrainState<T>, dataset: &Dataset<T>) -> Result<RgbImage> {
    let config = state.config();
    let mut rng = RngStream::new(config.seed ^ SAMPLE_SALT);
    let (a, b) = dataset.domains();
    let n = config.samples.min(a.len());
    let inputs = stack(&a.images()[..n])?;
    let columns: Vec<Vec<RgbImage>> = match config.task {
        Task::Paired => {
            let targets: Vec<Tensor<T>> = (0..n)
                .map(|i| b.images()[a.pairing().map_or(i, |p| p[i])].clone())
                .collect();
            let fake = state.translate(0, &inputs, &mut rng)?;
            vec![to_images(&inputs)?, to_images(&stack(&targets)?)?, to_images(&fake)?]
        }
        Task::Unpaired => {
            let fake = state.translate(0, &inputs, &mut rng)?;
            let back = state.translate(1, &fake, &mut rng)?;
            vec![to_images(&inputs)?, to_images(&fake)?, to_images(&back)?]
        }
    };
    let rows: Vec<Vec<&RgbImage>> = (0..n).map(|i| columns.iter().map(|c| &c[i]).collect()).collect();
    let refs: Vec<&[&RgbImage]> = rows.iter().map(Vec::as_slice).collect();
    Ok(RgbImage::grid(&refs)?)
}
