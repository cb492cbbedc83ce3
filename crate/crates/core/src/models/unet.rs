use alloc::format;
use alloc::vec::Vec;

use super::{BlockRole, BlockSpec, ConvKind, ModelKind, ModelSpec, Network};
use crate::autograd::{Activation, BatchNormConfig};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

const SLOPE: f64 = 0.2;
const DROPOUT: f64 = 0.5;
const DROPOUT_BLOCKS: usize = 3;

/// Encoder of `depth` 4x4 stride-2 conv blocks (channels `base_width * {1,2,4,8,8,..}`),
/// a mirrored decoder of 4x4 stride-2 transposed-conv blocks with dropout on its
/// first three blocks, and a 3x3 output conv followed by tanh.
///
/// The outermost and innermost encoder blocks are unnormalized; the innermost
/// one is 1x1 for `2^depth` inputs, where batch statistics degenerate.
pub fn unet_spec(
    in_channels: usize,
    out_channels: usize,
    base_width: usize,
    depth: usize,
    skip: bool,
) -> Result<ModelSpec> {
    if depth == 0 || base_width == 0 || in_channels == 0 || out_channels == 0 {
        return Err(Error::invalid(
            "build_unet_generator",
            format!("depth {depth}, width {base_width}, channels {in_channels}->{out_channels} must be positive"),
        ));
    }
    let width = |level: usize| base_width * (1 << level.min(3));
    let mut blocks = Vec::with_capacity(2 * depth + 1);
    let mut channels = in_channels;
    for level in 0..depth {
        blocks.push(BlockSpec {
            role: BlockRole::Encoder,
            conv: ConvKind::Conv,
            in_channels: channels,
            out_channels: width(level),
            kernel: 4,
            stride: 2,
            padding: 1,
            norm: level > 0 && level + 1 < depth,
            activation: Activation::LeakyRelu(SLOPE),
            dropout: 0.0,
        });
        channels = width(level);
    }
    for i in 0..depth {
        // decoder block i restores the resolution of encoder level depth-2-i
        let out = if i + 1 < depth { width(depth - 2 - i) } else { base_width };
        let input = if skip && i > 0 { 2 * channels } else { channels };
        blocks.push(BlockSpec {
            role: BlockRole::Decoder,
            conv: ConvKind::ConvTranspose,
            in_channels: input,
            out_channels: out,
            kernel: 4,
            stride: 2,
            padding: 1,
            norm: true,
            activation: Activation::Relu,
            dropout: if i < DROPOUT_BLOCKS { DROPOUT } else { 0.0 },
        });
        channels = out;
    }
    blocks.push(BlockSpec {
        role: BlockRole::Output,
        conv: ConvKind::Conv,
        in_channels: channels,
        out_channels,
        kernel: 3,
        stride: 1,
        padding: 1,
        norm: false,
        activation: Activation::Tanh,
        dropout: 0.0,
    });
    let spec = ModelSpec {
        kind: ModelKind::Generator,
        in_channels,
        out_channels,
        skip_connections: skip,
        variant: None,
        dropout_at_inference: true,
        batchnorm: BatchNormConfig::default(),
        init_std: 0.02,
        blocks,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn build_unet_generator<T: Scalar>(
    in_channels: usize,
    out_channels: usize,
    base_width: usize,
    depth: usize,
    skip: bool,
    rng: &mut RngStream,
) -> Result<Network<T>> {
    Network::new(unet_spec(in_channels, out_channels, base_width, depth, skip)?, rng)
}
