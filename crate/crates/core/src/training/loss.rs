use alloc::format;
use core::fmt;
use core::str::FromStr;

use crate::autograd::{Graph, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pixel reconstruction distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReconKind {
    /// mean |y - G|
    L1,
    /// mean (y - G)^2
    L2,
    /// `alpha * L1 + (1 - alpha) * L2`
    Mix(f64),
}

impl fmt::Display for ReconKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconKind::L1 => f.write_str("l1"),
            ReconKind::L2 => f.write_str("l2"),
            ReconKind::Mix(_) => f.write_str("mix"),
        }
    }
}

impl FromStr for ReconKind {
    type Err = Error;

    /// `l1`, `l2`, `mix` (alpha 0.5) or `mix:<alpha>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(ReconKind::L1),
            "l2" => Ok(ReconKind::L2),
            "mix" => Ok(ReconKind::Mix(0.5)),
            _ => {
                let alpha = s
                    .strip_prefix("mix:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid("loss", format!("unknown loss {s:?}")))?;
                ReconKind::Mix(alpha).validated()
            }
        }
    }
}

impl ReconKind {
    pub fn validated(self) -> Result<Self> {
        match self {
            ReconKind::Mix(a) if !(0.0..=1.0).contains(&a) => {
                Err(Error::invalid("loss", format!("mix weight {a} outside [0, 1]")))
            }
            k => Ok(k),
        }
    }
}

/// Reconstruction term and its weight in the generator objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossVariant {
    pub kind: ReconKind,
    pub lambda: f64,
}

/// Generator adversarial loss: mean BCE of the fake logits against "real".
pub fn gan_loss_generator<T: Scalar>(graph: &mut Graph<T>, fake_logits: Var) -> Var {
    graph.bce_with_logits(fake_logits, T::one())
}

/// Discriminator loss, halved: `(BCE(real, 1) + BCE(fake, 0)) / 2`.
pub fn gan_loss_discriminator<T: Scalar>(graph: &mut Graph<T>, real_logits: Var, fake_logits: Var) -> Var {
    let real = graph.bce_with_logits(real_logits, T::one());
    let fake = graph.bce_with_logits(fake_logits, T::zero());
    let sum = graph.add(real, fake).expect("scalar losses");
    graph.scale(sum, T::from_f64(0.5))
}

pub fn recon_loss<T: Scalar>(graph: &mut Graph<T>, generated: Var, target: Var, kind: ReconKind) -> Result<Var> {
    let (gs, ts) = (graph.value(generated).shape(), graph.value(target).shape());
    if gs != ts {
        return Err(Error::shape("recon_loss", format!("{gs:?} vs {ts:?}")));
    }
    let diff = graph.sub(target, generated)?;
    let l1 = |g: &mut Graph<T>| {
        let a = g.abs(diff);
        g.mean(a)
    };
    let l2 = |g: &mut Graph<T>| {
        let s = g.square(diff);
        g.mean(s)
    };
    Ok(match kind {
        ReconKind::L1 => l1(graph),
        ReconKind::L2 => l2(graph),
        ReconKind::Mix(alpha) => {
            let a = l1(graph);
            let b = l2(graph);
            let a = graph.scale(a, T::from_f64(alpha));
            let b = graph.scale(b, T::from_f64(1.0 - alpha));
            graph.add(a, b)?
        }
    })
}
