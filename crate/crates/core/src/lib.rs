//! Dependency-light core for paired (conditional GAN) and unpaired (cycle-consistent)
//! image-to-image translation.
//!
//! Everything here is pure computation over in-memory values and builds without `std`:
//! a reverse-mode autograd tensor library, the U-Net generator and PatchGAN
//! discriminators, GAN / reconstruction objectives and the training step logic, the
//! augmentation pipeline, and the kNN precision/recall and FID metrics. File formats,
//! the command line and anything touching the filesystem live in the `imtrans` crate.

#![no_std]
#![deny(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autograd;
pub mod data;
mod error;
pub mod gradcheck;
pub mod metrics;
pub mod models;
pub mod optim;
mod rng;
mod scalar;
mod tensor;
pub mod training;

pub use crate::autograd::{Activation, Gradients, Graph, Var};
pub use crate::error::{Error, Result};
pub use crate::rng::RngStream;
pub use crate::scalar::Scalar;
pub use crate::tensor::Tensor;
