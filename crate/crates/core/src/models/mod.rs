//! Declarative network descriptions ([`ModelSpec`]) and their parameterized
//! instances ([`Network`]).

mod network;
mod patchgan;
mod text;
mod unet;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::autograd::{Activation, BatchNormConfig};
use crate::error::{Error, Result};

pub use self::network::{Bound, Network};
pub use self::patchgan::{build_patchgan, patchgan_spec, PatchVariant};
pub use self::unet::{build_unet_generator, unet_spec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Generator,
    Discriminator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvKind {
    Conv,
    ConvTranspose,
}

/// Where a block sits; also the prefix of its parameter names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRole {
    Encoder,
    Decoder,
    Output,
    Stage,
    Head,
}

impl BlockRole {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockRole::Encoder => "encoder",
            BlockRole::Decoder => "decoder",
            BlockRole::Output => "output",
            BlockRole::Stage => "stage",
            BlockRole::Head => "head",
        }
    }
}

impl FromStr for BlockRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "encoder" => BlockRole::Encoder,
            "decoder" => BlockRole::Decoder,
            "output" => BlockRole::Output,
            "stage" => BlockRole::Stage,
            "head" => BlockRole::Head,
            _ => return Err(Error::invalid("model spec", format!("unknown block role {s:?}"))),
        })
    }
}

/// conv / transposed conv, then optional batchnorm, activation and dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub role: BlockRole,
    pub conv: ConvKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub norm: bool,
    pub activation: Activation,
    /// Dropout rate; 0 disables the layer.
    pub dropout: f64,
}

impl BlockSpec {
    /// Weight count plus bias (when unnormalized) or gamma/beta (when normalized).
    pub fn parameter_count(&self) -> usize {
        let weight = self.in_channels * self.out_channels * self.kernel * self.kernel;
        weight + if self.norm { 2 * self.out_channels } else { self.out_channels }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub in_channels: usize,
    pub out_channels: usize,
    /// U-Net only: concatenate encoder activations into the decoder.
    pub skip_connections: bool,
    pub variant: Option<PatchVariant>,
    /// Keep dropout sampling in eval mode, so dropout acts as the generator's noise input.
    pub dropout_at_inference: bool,
    pub batchnorm: BatchNormConfig,
    pub init_std: f64,
    pub blocks: Vec<BlockSpec>,
}

impl ModelSpec {
    pub fn parameter_count(&self) -> usize {
        self.blocks.iter().map(BlockSpec::parameter_count).sum()
    }

    pub fn encoder_depth(&self) -> usize {
        self.blocks.iter().filter(|b| b.role == BlockRole::Encoder).count()
    }

    pub fn decoder_depth(&self) -> usize {
        self.blocks.iter().filter(|b| b.role == BlockRole::Decoder).count()
    }

    /// Spatial extent after each block for an `height x width` input.
    pub fn block_extents(&self, height: usize, width: usize) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let (mut h, mut w) = (height, width);
        for b in &self.blocks {
            let step = |x: usize| match b.conv {
                ConvKind::Conv => (x + 2 * b.padding)
                    .checked_sub(b.kernel)
                    .map(|v| v / b.stride + 1),
                ConvKind::ConvTranspose => ((x - 1) * b.stride + b.kernel)
                    .checked_sub(2 * b.padding)
                    .filter(|&v| v > 0),
            };
            match (step(h), step(w)) {
                (Some(nh), Some(nw)) if nh > 0 && nw > 0 => (h, w) = (nh, nw),
                _ => {
                    return Err(Error::shape(
                        "model",
                        format!(
                            "{} block leaves no output for a {h}x{w} input (model input {height}x{width})",
                            b.role.as_str()
                        ),
                    ))
                }
            }
            out.push((h, w));
        }
        Ok(out)
    }

    /// Checks the structural invariants of the spec.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::SpecMismatch(msg));
        let Some(first) = self.blocks.first() else {
            return bad("model has no blocks".into());
        };
        if first.in_channels != self.in_channels {
            return bad(format!(
                "first block takes {} channels, model declares {}",
                first.in_channels, self.in_channels
            ));
        }
        let last = self.blocks.last().expect("non-empty");
        if last.out_channels != self.out_channels {
            return bad(format!(
                "last block emits {} channels, model declares {}",
                last.out_channels, self.out_channels
            ));
        }
        for b in &self.blocks {
            if b.kernel == 0 || b.stride == 0 || b.in_channels == 0 || b.out_channels == 0 {
                return bad(format!("degenerate block {b:?}"));
            }
            if !(0.0..1.0).contains(&b.dropout) {
                return bad(format!("dropout rate {} outside [0, 1)", b.dropout));
            }
        }
        match self.kind {
            ModelKind::Generator => {
                if last.activation != Activation::Tanh {
                    return bad("generator must end in tanh".into());
                }
                if self.skip_connections && self.encoder_depth() != self.decoder_depth() {
                    return bad(format!(
                        "skip connections need matching depths, got encoder {} / decoder {}",
                        self.encoder_depth(),
                        self.decoder_depth()
                    ));
                }
            }
            ModelKind::Discriminator => {
                if self.skip_connections {
                    return bad("discriminators have no skip connections".into());
                }
            }
        }
        Ok(())
    }
}

/// Receptive field of one output unit of a plain convolution stack, via the
/// backward recurrence `r_prev = stride * r + (kernel - stride)` seeded at 1.
pub fn receptive_field(spec: &ModelSpec) -> Result<usize> {
    if spec.skip_connections {
        return Err(Error::invalid("receptive_field", "skip connections are not a plain stack"));
    }
    let mut r = 1usize;
    for b in spec.blocks.iter().rev() {
        if b.conv != ConvKind::Conv {
            return Err(Error::invalid(
                "receptive_field",
                format!("{} block is a transposed convolution", b.role.as_str()),
            ));
        }
        // r >= 1, so stride * r - stride never underflows
        r = b.stride * r - b.stride + b.kernel;
    }
    Ok(r)
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Generator => "generator",
            ModelKind::Discriminator => "discriminator",
        })
    }
}

#[cfg(test)]
mod tests;
