//! Objectives and the paired / unpaired training loops.

mod config;
mod loss;
mod objective;
mod state;
#[cfg(test)]
mod tests;

pub use config::{Precision, StepOrder, Task, TrainConfig};
pub use loss::{gan_loss_discriminator, gan_loss_generator, recon_loss, LossVariant, ReconKind};
pub use objective::{cycle_loss, paired_objective, unpaired_objective, Bonded, CycleNets, Module, PairedLosses, UnpairedLosses};
pub use state::{Models, Phase, TrainState};

/// Scalar losses of one training step.
///
/// For the unpaired task `gen_gan` is the sum of both adversarial terms,
/// `gen_recon` the cycle loss and `disc`/`disc_b` the losses of `D_A`/`D_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub gen_gan: f64,
    pub gen_recon: f64,
    pub gen_total: f64,
    pub disc: f64,
    pub disc_b: Option<f64>,
}
