use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use imtrans_core::data::Split;
use imtrans_core::models::PatchVariant;
use imtrans_core::training::Task;

use crate::commands::{self, EvaluateArgs, GradcheckArgs, InferArgs, MakeDatasetArgs, ReceptiveFieldArgs, TrainArgs};
use crate::error::{CliError, Result};

/// Paired and unpaired image-to-image translation with conditional GANs.
#[derive(Debug, Parser)]
#[command(name = "imtrans", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed overriding the config or the command's default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Training config file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train from a config file.
    Train {
        /// Dataset root overriding the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Epoch count overriding the config.
        #[arg(long)]
        epochs: Option<u64>,
        /// Checkpoint to continue from.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Precision, recall and FID of a checkpoint's generator.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "val")]
        split: Split,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Images per set [default: 256, or all rows of an embedding file].
        #[arg(long)]
        n: Option<usize>,
        /// Feature files for the generated and the real set.
        #[arg(long, num_args = 2, value_names = ["GENERATED", "REAL"])]
        embedding_file: Option<Vec<PathBuf>>,
        /// Compare the real set with itself.
        #[arg(long)]
        self_eval: bool,
        /// Random-projection seed [default: --seed].
        #[arg(long)]
        embed_seed: Option<u64>,
        /// `a` (A to B) or `b` (B to A).
        #[arg(long, default_value = "a")]
        generator: String,
    },
    /// Translate a PNG or a directory of PNGs.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "a")]
        generator: String,
    },
    /// Render a synthetic dataset.
    MakeDataset {
        #[arg(long, default_value = "paired")]
        task: Task,
        #[arg(long, default_value_t = 64)]
        n_train: usize,
        #[arg(long, default_value_t = 16)]
        n_val: usize,
        #[arg(long, default_value_t = 32)]
        size: usize,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        /// `all`, or op names separated by commas.
        #[arg(long, default_value = "all")]
        ops: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Receptive field of the discriminator variants.
    ReceptiveField {
        #[arg(long)]
        variant: Vec<PatchVariant>,
    },
}

fn generator_name(g: String) -> Result<String> {
    match g.as_str() {
        "a" | "b" => Ok(g),
        _ => Err(CliError::Validation(format!("--generator must be `a` or `b`, got {g:?}"))),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let Global { seed, config, out } = cli.global;
    match cli.command {
        Command::Train { dataset, epochs, resume } => {
            let config = config.ok_or_else(|| CliError::Validation("train needs --config".into()))?;
            let outcome = commands::train(&TrainArgs {
                config,
                out,
                seed,
                dataset,
                epochs,
                resume,
            })?;
            println!("trained {} epochs; outputs in {}", outcome.config.epochs, outcome.out.display());
        }
        Command::Evaluate {
            checkpoint,
            dataset,
            split,
            k,
            n,
            embedding_file,
            self_eval,
            embed_seed,
            generator,
        } => {
            commands::evaluate(&EvaluateArgs {
                checkpoint,
                dataset,
                split,
                k,
                n,
                embedding_files: embedding_file.map(|v| (v[0].clone(), v[1].clone())),
                self_eval,
                seed: seed.unwrap_or(0),
                embed_seed,
                generator: generator_name(generator)?,
                out,
            })?;
        }
        Command::Infer {
            checkpoint,
            input,
            generator,
        } => {
            let written = commands::infer(&InferArgs {
                checkpoint,
                input,
                out,
                seed: seed.unwrap_or(0),
                generator: generator_name(generator)?,
            })?;
            for f in written {
                println!("{}", f.display());
            }
        }
        Command::MakeDataset {
            task,
            n_train,
            n_val,
            size,
        } => {
            let files = commands::make_dataset(&MakeDatasetArgs {
                task,
                n_train,
                n_val,
                size,
                seed: seed.unwrap_or(0),
                out,
            })?;
            println!("wrote {} images", files.len());
        }
        Command::Gradcheck { ops, trials } => {
            commands::gradcheck(&GradcheckArgs {
                ops,
                trials,
                seed: seed.unwrap_or(0),
                out,
            })?;
        }
        Command::ReceptiveField { variant } => {
            commands::receptive_field(&ReceptiveFieldArgs { variants: variant, out })?;
        }
    }
    Ok(())
}
