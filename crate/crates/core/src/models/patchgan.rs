use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::{BlockRole, BlockSpec, ConvKind, ModelKind, ModelSpec, Network};
use crate::autograd::{Activation, BatchNormConfig};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// PatchGAN discriminator sizes, named after the receptive field of one logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchVariant {
    Patch16,
    Patch70,
    Patch286,
}

impl PatchVariant {
    pub const ALL: [PatchVariant; 3] = [PatchVariant::Patch16, PatchVariant::Patch70, PatchVariant::Patch286];

    /// Side length `M` of the square patch each output logit classifies.
    pub fn nominal(self) -> usize {
        match self {
            PatchVariant::Patch16 => 16,
            PatchVariant::Patch70 => 70,
            PatchVariant::Patch286 => 286,
        }
    }

    /// Strides of the hidden conv layers (kernel 4); the 1-channel head is stride 1.
    fn strides(self) -> &'static [usize] {
        match self {
            PatchVariant::Patch16 => &[2, 1],
            PatchVariant::Patch70 => &[2, 2, 2, 1],
            PatchVariant::Patch286 => &[2, 2, 2, 2, 2, 1],
        }
    }
}

impl fmt::Display for PatchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "patch{}", self.nominal())
    }
}

impl FromStr for PatchVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "patch16" | "16" => Ok(PatchVariant::Patch16),
            "patch70" | "70" => Ok(PatchVariant::Patch70),
            "patch286" | "286" => Ok(PatchVariant::Patch286),
            _ => Err(Error::invalid(
                "patchgan",
                format!("unknown variant {s:?} (expected patch16, patch70 or patch286)"),
            )),
        }
    }
}

const KERNEL: usize = 4;
const SLOPE: f64 = 0.2;

/// Stacked 4x4 conv + batchnorm + leaky-ReLU layers ending in a 1-channel map
/// of patch logits. Channels double from `base_width`, capped at `8 * base_width`;
/// the first layer is unnormalized.
pub fn patchgan_spec(in_channels: usize, variant: PatchVariant, base_width: usize) -> ModelSpec {
    let mut blocks = Vec::new();
    let mut channels = in_channels;
    for (i, &stride) in variant.strides().iter().enumerate() {
        let out = base_width * (1 << i.min(3));
        blocks.push(BlockSpec {
            role: BlockRole::Stage,
            conv: ConvKind::Conv,
            in_channels: channels,
            out_channels: out,
            kernel: KERNEL,
            stride,
            padding: 1,
            norm: i > 0,
            activation: Activation::LeakyRelu(SLOPE),
            dropout: 0.0,
        });
        channels = out;
    }
    blocks.push(BlockSpec {
        role: BlockRole::Head,
        conv: ConvKind::Conv,
        in_channels: channels,
        out_channels: 1,
        kernel: KERNEL,
        stride: 1,
        padding: 1,
        norm: false,
        activation: Activation::Identity,
        dropout: 0.0,
    });
    ModelSpec {
        kind: ModelKind::Discriminator,
        in_channels,
        out_channels: 1,
        skip_connections: false,
        variant: Some(variant),
        dropout_at_inference: false,
        batchnorm: BatchNormConfig::default(),
        init_std: 0.02,
        blocks,
    }
}

pub fn build_patchgan<T: Scalar>(
    in_channels: usize,
    variant: PatchVariant,
    base_width: usize,
    rng: &mut RngStream,
) -> Result<Network<T>> {
    Network::new(patchgan_spec(in_channels, variant, base_width), rng)
}
