use alloc::vec;
use alloc::vec::Vec;

use super::Mode;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchNormConfig {
    pub momentum: f64,
    pub eps: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        BatchNormConfig {
            momentum: 0.1,
            eps: 1e-5,
        }
    }
}

/// Per-channel running mean and (unbiased) variance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Scalar> RunningStats<T> {
    pub fn new(channels: usize) -> Self {
        RunningStats {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
        }
    }
}

pub(super) struct Forward<T> {
    pub output: Vec<T>,
    pub mean: Vec<T>,
    pub inv_std: Vec<T>,
}

pub(super) struct Backward<T> {
    pub d_input: Vec<T>,
    pub d_gamma: Vec<T>,
    pub d_beta: Vec<T>,
}

/// Visit every element of channel `c` in an `[N,C,H,W]` buffer.
fn channel_indices(dims: [usize; 4], c: usize) -> impl Iterator<Item = usize> {
    let [n, ch, h, w] = dims;
    let plane = h * w;
    (0..n).flat_map(move |i| {
        let start = (i * ch + c) * plane;
        start..start + plane
    })
}

pub(super) fn forward<T: Scalar>(
    dims: [usize; 4],
    x: &[T],
    gamma: &[T],
    beta: &[T],
    mode: Mode,
    running: &mut RunningStats<T>,
    cfg: BatchNormConfig,
) -> Result<Forward<T>> {
    let [n, c, h, w] = dims;
    let count = n * h * w;
    if mode == Mode::Train && count < 2 {
        return Err(Error::DegenerateVariance { count });
    }
    let eps = T::from_f64(cfg.eps);
    let momentum = T::from_f64(cfg.momentum);
    let m = T::from_f64(count as f64);
    let mut output = vec![T::zero(); x.len()];
    let mut means = Vec::with_capacity(c);
    let mut inv_stds = Vec::with_capacity(c);
    for ch in 0..c {
        let (mean, var) = match mode {
            Mode::Train => {
                let mean = channel_indices(dims, ch).fold(T::zero(), |a, i| a + x[i]) / m;
                let ss = channel_indices(dims, ch).fold(T::zero(), |a, i| {
                    let d = x[i] - mean;
                    a + d * d
                });
                let var = ss / m;
                let unbiased = ss / T::from_f64((count - 1) as f64);
                running.mean[ch] = (T::one() - momentum) * running.mean[ch] + momentum * mean;
                running.var[ch] = (T::one() - momentum) * running.var[ch] + momentum * unbiased;
                (mean, var)
            }
            Mode::Eval => (running.mean[ch], running.var[ch]),
        };
        let inv_std = T::one() / (var + eps).sqrt();
        for i in channel_indices(dims, ch) {
            output[i] = gamma[ch] * (x[i] - mean) * inv_std + beta[ch];
        }
        means.push(mean);
        inv_stds.push(inv_std);
    }
    Ok(Forward {
        output,
        mean: means,
        inv_std: inv_stds,
    })
}

pub(super) fn backward<T: Scalar>(
    dims: [usize; 4],
    x: &[T],
    gamma: &[T],
    mean: &[T],
    inv_std: &[T],
    batch_stats: bool,
    grad: &[T],
) -> Backward<T> {
    let [n, c, h, w] = dims;
    let m = T::from_f64((n * h * w) as f64);
    let mut d_input = vec![T::zero(); x.len()];
    let mut d_gamma = vec![T::zero(); c];
    let mut d_beta = vec![T::zero(); c];
    for ch in 0..c {
        let (mu, is) = (mean[ch], inv_std[ch]);
        let mut sum_g = T::zero();
        let mut sum_gx = T::zero();
        for i in channel_indices(dims, ch) {
            sum_g = sum_g + grad[i];
            sum_gx = sum_gx + grad[i] * (x[i] - mu) * is;
        }
        d_beta[ch] = sum_g;
        d_gamma[ch] = sum_gx;
        let k = gamma[ch] * is;
        for i in channel_indices(dims, ch) {
            d_input[i] = if batch_stats {
                let xhat = (x[i] - mu) * is;
                k * (grad[i] - sum_g / m - xhat * sum_gx / m)
            } else {
                k * grad[i]
            };
        }
    }
    Backward {
        d_input,
        d_gamma,
        d_beta,
    }
}
