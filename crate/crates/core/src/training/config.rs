use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{LossVariant, ReconKind};
use crate::autograd::BatchNormConfig;
use crate::data::AugmentConfig;
use crate::error::{Error, Result};
use crate::models::PatchVariant;
use crate::optim::Adam;

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(Error::invalid(stringify!($name), format!("unknown value {s:?}"))),
                }
            }
        }
    };
}

keyword_enum!(Task { Paired => "paired", Unpaired => "unpaired" });
keyword_enum!(StepOrder { GeneratorFirst => "generator_first", DiscriminatorFirst => "discriminator_first" });
keyword_enum!(Precision { F32 => "f32", F64 => "f64" });

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub task: Task,
    pub loss: LossVariant,
    pub patch: PatchVariant,
    pub skip: bool,
    pub batch_size: usize,
    pub epochs: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub dataset: String,
    pub output: String,
    pub image_size: usize,
    pub channels: usize,
    pub gen_depth: usize,
    pub gen_width: usize,
    pub disc_width: usize,
    pub step_order: StepOrder,
    /// Feed the source image to the unpaired discriminators alongside the candidate.
    pub unpaired_conditional: bool,
    pub flip: bool,
    pub jitter: bool,
    pub jitter_upsize: usize,
    pub precision: Precision,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub init_std: f64,
    /// Epochs between checkpoints; 0 keeps only the final one.
    pub checkpoint_every: u64,
    /// Epochs between sample grids; 0 disables them.
    pub sample_every: u64,
    /// Rows in each sample grid.
    pub samples: usize,
}

impl TrainConfig {
    /// Defaults for `task`: lambda 100 paired, 10 unpaired; 32x32 images and a depth-5 U-Net.
    pub fn new(task: Task) -> Self {
        let image_size = 32;
        TrainConfig {
            task,
            loss: LossVariant {
                kind: ReconKind::L1,
                lambda: default_lambda(task),
            },
            patch: PatchVariant::Patch70,
            skip: true,
            batch_size: 16,
            epochs: 150,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            dataset: String::new(),
            output: String::new(),
            image_size,
            channels: 3,
            gen_depth: 5,
            gen_width: 64,
            disc_width: 64,
            step_order: StepOrder::GeneratorFirst,
            unpaired_conditional: false,
            flip: true,
            jitter: true,
            jitter_upsize: crate::data::augment_upsize(image_size),
            precision: Precision::F32,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
            init_std: 0.02,
            checkpoint_every: 1,
            sample_every: 1,
            samples: 4,
        }
    }

    pub fn adam(&self) -> Adam {
        Adam {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    pub fn augment(&self) -> AugmentConfig {
        AugmentConfig {
            flip: self.flip,
            jitter: self.jitter,
            jitter_upsize: self.jitter_upsize,
        }
    }

    pub fn batchnorm(&self) -> BatchNormConfig {
        BatchNormConfig {
            momentum: self.bn_momentum,
            eps: self.bn_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |detail: String| Err(Error::invalid("config", detail));
        self.loss.kind.validated()?;
        if !(self.loss.lambda >= 0.0) || !self.loss.lambda.is_finite() {
            return fail(format!("lambda {} must be a non-negative number", self.loss.lambda));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".to_string());
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return fail(format!(
                "optimizer settings lr={} beta1={} beta2={} adam_eps={} out of range",
                self.lr, self.beta1, self.beta2, self.adam_eps
            ));
        }
        if self.channels == 0 || self.gen_depth == 0 || self.gen_width == 0 || self.disc_width == 0 {
            return fail("channels, gen_depth, gen_width and disc_width must be positive".to_string());
        }
        if self.image_size == 0 || !self.image_size.is_multiple_of(1 << self.gen_depth.min(63)) {
            return fail(format!(
                "image_size {} must be a positive multiple of 2^gen_depth = {}",
                self.image_size,
                1u64 << self.gen_depth.min(63)
            ));
        }
        self.augment().validate(self.image_size)?;
        if !(self.bn_eps > 0.0) || !(0.0..=1.0).contains(&self.bn_momentum) || !(self.init_std > 0.0) {
            return fail("bn_eps and init_std must be positive, bn_momentum in [0, 1]".to_string());
        }
        Ok(())
    }

    /// `(key, value)` for every field, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = Vec::new();
        let mut put = |k: &'static str, v: String| out.push((k, v));
        put("task", self.task.to_string());
        put("loss", recon_text(self.loss.kind));
        put("lambda", fmt_f64(self.loss.lambda));
        put("patch", self.patch.to_string());
        put("skip", self.skip.to_string());
        put("batch_size", self.batch_size.to_string());
        put("epochs", self.epochs.to_string());
        put("lr", fmt_f64(self.lr));
        put("beta1", fmt_f64(self.beta1));
        put("beta2", fmt_f64(self.beta2));
        put("adam_eps", fmt_f64(self.adam_eps));
        put("seed", self.seed.to_string());
        put("dataset", self.dataset.clone());
        put("output", self.output.clone());
        put("image_size", self.image_size.to_string());
        put("channels", self.channels.to_string());
        put("gen_depth", self.gen_depth.to_string());
        put("gen_width", self.gen_width.to_string());
        put("disc_width", self.disc_width.to_string());
        put("step_order", self.step_order.to_string());
        put("unpaired_conditional", self.unpaired_conditional.to_string());
        put("flip", self.flip.to_string());
        put("jitter", self.jitter.to_string());
        put("jitter_upsize", self.jitter_upsize.to_string());
        put("precision", self.precision.to_string());
        put("bn_momentum", fmt_f64(self.bn_momentum));
        put("bn_eps", fmt_f64(self.bn_eps));
        put("init_std", fmt_f64(self.init_std));
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("sample_every", self.sample_every.to_string());
        put("samples", self.samples.to_string());
        out
    }

    /// Canonical `key = value` text, one field per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        }
        s
    }

    /// Parse `key = value` lines; `#` starts a comment. Keys not given keep their
    /// defaults for the configured task. Unknown or repeated keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs: Vec<(&str, &str, usize)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid("config", format!("line {}: expected key = value", n + 1)))?;
            let k = k.trim();
            if pairs.iter().any(|p| p.0 == k) {
                return Err(Error::invalid("config", format!("line {}: duplicate key {k:?}", n + 1)));
            }
            pairs.push((k, v.trim(), n + 1));
        }
        let task = match pairs.iter().find(|p| p.0 == "task") {
            Some(p) => p.1.parse()?,
            None => Task::Paired,
        };
        let mut cfg = TrainConfig::new(task);
        let explicit_upsize = pairs.iter().any(|p| p.0 == "jitter_upsize");
        for (k, v, n) in pairs {
            cfg.set(k, v)
                .map_err(|e| Error::invalid("config", format!("line {n}: {e}")))?;
        }
        if !explicit_upsize {
            cfg.jitter_upsize = crate::data::augment_upsize(cfg.image_size);
        }
        Ok(cfg)
    }

    /// Assign one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<X: FromStr>(key: &str, v: &str) -> Result<X> {
            v.parse()
                .map_err(|_| Error::invalid("config", format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "task" => self.task = value.parse()?,
            "loss" => {
                self.loss.kind = value.parse()?;
            }
            "lambda" => self.loss.lambda = num(key, value)?,
            "patch" => self.patch = value.parse()?,
            "skip" => self.skip = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "adam_eps" => self.adam_eps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "dataset" => self.dataset = value.to_string(),
            "output" => self.output = value.to_string(),
            "image_size" => self.image_size = num(key, value)?,
            "channels" => self.channels = num(key, value)?,
            "gen_depth" => self.gen_depth = num(key, value)?,
            "gen_width" => self.gen_width = num(key, value)?,
            "disc_width" => self.disc_width = num(key, value)?,
            "step_order" => self.step_order = value.parse()?,
            "unpaired_conditional" => self.unpaired_conditional = num(key, value)?,
            "flip" => self.flip = num(key, value)?,
            "jitter" => self.jitter = num(key, value)?,
            "jitter_upsize" => self.jitter_upsize = num(key, value)?,
            "precision" => self.precision = value.parse()?,
            "bn_momentum" => self.bn_momentum = num(key, value)?,
            "bn_eps" => self.bn_eps = num(key, value)?,
            "init_std" => self.init_std = num(key, value)?,
            "checkpoint_every" => self.checkpoint_every = num(key, value)?,
            "sample_every" => self.sample_every = num(key, value)?,
            "samples" => self.samples = num(key, value)?,
            _ => return Err(Error::invalid("config", format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}

fn default_lambda(task: Task) -> f64 {
    match task {
        Task::Paired => 100.0,
        Task::Unpaired => 10.0,
    }
}

fn recon_text(kind: ReconKind) -> String {
    match kind {
        ReconKind::Mix(a) => format!("mix:{}", fmt_f64(a)),
        k => k.to_string(),
    }
}

/// Shortest text that parses back to the same value.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
