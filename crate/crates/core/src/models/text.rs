use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;
use core::str::FromStr;

use super::{BlockSpec, ConvKind, ModelKind, ModelSpec};
use crate::autograd::{Activation, BatchNormConfig};
use crate::error::{Error, Result};

fn bad(detail: String) -> Error {
    Error::SpecMismatch(detail)
}

fn activation_text(a: Activation) -> String {
    match a {
        Activation::Identity => "identity".into(),
        Activation::Relu => "relu".into(),
        Activation::LeakyRelu(s) => format!("leaky_relu:{s:?}"),
        Activation::Tanh => "tanh".into(),
        Activation::Sigmoid => "sigmoid".into(),
    }
}

fn parse_activation(s: &str) -> Result<Activation> {
    Ok(match s {
        "identity" => Activation::Identity,
        "relu" => Activation::Relu,
        "tanh" => Activation::Tanh,
        "sigmoid" => Activation::Sigmoid,
        _ => {
            let slope = s
                .strip_prefix("leaky_relu:")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("unknown activation {s:?}")))?;
            Activation::LeakyRelu(slope)
        }
    })
}

fn parse<X: FromStr>(key: &str, v: &str) -> Result<X> {
    v.parse().map_err(|_| bad(format!("{key}: cannot parse {v:?}")))
}

impl ModelSpec {
    /// Canonical line-oriented text; [`ModelSpec::from_text`] inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "in_channels = {}", self.in_channels);
        let _ = writeln!(s, "out_channels = {}", self.out_channels);
        let _ = writeln!(s, "skip_connections = {}", self.skip_connections);
        let variant = self.variant.map_or_else(|| "none".to_string(), |v| v.to_string());
        let _ = writeln!(s, "variant = {variant}");
        let _ = writeln!(s, "dropout_at_inference = {}", self.dropout_at_inference);
        let _ = writeln!(s, "bn_momentum = {:?}", self.batchnorm.momentum);
        let _ = writeln!(s, "bn_eps = {:?}", self.batchnorm.eps);
        let _ = writeln!(s, "init_std = {:?}", self.init_std);
        for b in &self.blocks {
            let conv = match b.conv {
                ConvKind::Conv => "conv",
                ConvKind::ConvTranspose => "conv_transpose",
            };
            let _ = writeln!(
                s,
                "block = {} {conv} {} {} {} {} {} {} {} {:?}",
                b.role.as_str(),
                b.in_channels,
                b.out_channels,
                b.kernel,
                b.stride,
                b.padding,
                b.norm,
                activation_text(b.activation),
                b.dropout
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = ModelSpec {
            kind: ModelKind::Generator,
            in_channels: 0,
            out_channels: 0,
            skip_connections: false,
            variant: None,
            dropout_at_inference: false,
            batchnorm: BatchNormConfig::default(),
            init_std: 0.02,
            blocks: Vec::new(),
        };
        let mut seen: Vec<&str> = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
            if key != "block" {
                if seen.contains(&key) {
                    return Err(bad(format!("duplicate key {key:?}")));
                }
                seen.push(key);
            }
            match key {
                "kind" => {
                    spec.kind = match value {
                        "generator" => ModelKind::Generator,
                        "discriminator" => ModelKind::Discriminator,
                        _ => return Err(bad(format!("unknown model kind {value:?}"))),
                    }
                }
                "in_channels" => spec.in_channels = parse(key, value)?,
                "out_channels" => spec.out_channels = parse(key, value)?,
                "skip_connections" => spec.skip_connections = parse(key, value)?,
                "variant" => spec.variant = if value == "none" { None } else { Some(value.parse()?) },
                "dropout_at_inference" => spec.dropout_at_inference = parse(key, value)?,
                "bn_momentum" => spec.batchnorm.momentum = parse(key, value)?,
                "bn_eps" => spec.batchnorm.eps = parse(key, value)?,
                "init_std" => spec.init_std = parse(key, value)?,
                "block" => spec.blocks.push(parse_block(value)?),
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        for required in ["kind", "in_channels", "out_channels"] {
            if !seen.contains(&required) {
                return Err(bad(format!("missing key {required:?}")));
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_block(value: &str) -> Result<BlockSpec> {
    let f: Vec<&str> = value.split_whitespace().collect();
    let [role, conv, cin, cout, kernel, stride, padding, norm, act, dropout] = f[..] else {
        return Err(bad(format!("block needs 10 fields, got {value:?}")));
    };
    Ok(BlockSpec {
        role: role.parse().map_err(|_| bad(format!("unknown block role {role:?}")))?,
        conv: match conv {
            "conv" => ConvKind::Conv,
            "conv_transpose" => ConvKind::ConvTranspose,
            _ => return Err(bad(format!("unknown conv kind {conv:?}"))),
        },
        in_channels: parse("in_channels", cin)?,
        out_channels: parse("out_channels", cout)?,
        kernel: parse("kernel", kernel)?,
        stride: parse("stride", stride)?,
        padding: parse("padding", padding)?,
        norm: parse("norm", norm)?,
        activation: parse_activation(act)?,
        dropout: parse("dropout", dropout)?,
    })
}
