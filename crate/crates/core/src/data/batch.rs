use alloc::vec::Vec;

use super::augment::augment_together;
use super::{AugmentConfig, Dataset};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One minibatch, each tensor `[N, C, H, W]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Batch<T> {
    Paired { input: Tensor<T>, target: Tensor<T> },
    Unpaired { a: Tensor<T>, b: Tensor<T> },
}

impl<T: Scalar> Batch<T> {
    pub fn len(&self) -> usize {
        match self {
            Batch::Paired { input: t, .. } | Batch::Unpaired { a: t, .. } => t.shape()[0],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Samples per epoch: the set size when paired, the larger domain when unpaired
/// (the smaller domain is cycled).
pub fn epoch_len<T: Scalar>(dataset: &Dataset<T>) -> usize {
    let (a, b) = dataset.domains();
    match dataset {
        Dataset::Paired { .. } => a.len(),
        Dataset::Unpaired { .. } => a.len().max(b.len()),
    }
}

/// One epoch of shuffled, augmented minibatches. The final batch may be short.
///
/// The iterator draws from its own stream, forked from the caller's at
/// construction, so the caller's stream can keep serving other consumers.
pub struct BatchIter<'a, T> {
    dataset: &'a Dataset<T>,
    order_a: Vec<usize>,
    order_b: Vec<usize>,
    len: usize,
    pos: usize,
    batch_size: usize,
    augment: AugmentConfig,
    rng: RngStream,
}

impl<'a, T: Scalar> BatchIter<'a, T> {
    pub fn new(dataset: &'a Dataset<T>, batch_size: usize, augment: AugmentConfig, rng: &mut RngStream) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::invalid("batch_iterator", "batch size must be at least 1"));
        }
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(shape) = dataset.image_shape() {
            if augment.jitter {
                augment.validate(shape[1])?;
            }
        }
        let mut rng = rng.fork();
        let (a, b) = dataset.domains();
        let mut order_a: Vec<usize> = (0..a.len()).collect();
        rng.shuffle(&mut order_a);
        let order_b = match dataset {
            Dataset::Paired { .. } => {
                let pairing = a.pairing().expect("paired sets carry a pairing");
                order_a.iter().map(|&i| pairing[i]).collect()
            }
            Dataset::Unpaired { .. } => {
                let mut order: Vec<usize> = (0..b.len()).collect();
                rng.shuffle(&mut order);
                order
            }
        };
        Ok(BatchIter {
            dataset,
            order_a,
            order_b,
            len: epoch_len(dataset),
            pos: 0,
            batch_size,
            augment,
            rng,
        })
    }

    /// Number of batches this epoch yields in total.
    pub fn batches(&self) -> usize {
        self.len.div_ceil(self.batch_size)
    }

    /// Indices into domain A and domain B visited this epoch, in order.
    pub fn schedule(&self) -> Vec<(usize, usize)> {
        (0..self.len)
            .map(|i| (self.order_a[i % self.order_a.len()], self.order_b[i % self.order_b.len()]))
            .collect()
    }

    fn next_batch(&mut self) -> Result<Batch<T>> {
        let end = (self.pos + self.batch_size).min(self.len);
        let (set_a, set_b) = self.dataset.domains();
        let mut xs = Vec::with_capacity(end - self.pos);
        let mut ys = Vec::with_capacity(end - self.pos);
        for i in self.pos..end {
            let ia = self.order_a[i % self.order_a.len()];
            let ib = self.order_b[i % self.order_b.len()];
            let mut imgs = [set_a.images()[ia].clone(), set_b.images()[ib].clone()];
            match self.dataset {
                Dataset::Paired { .. } => augment_together(&mut imgs, &self.augment, &mut self.rng)?,
                Dataset::Unpaired { .. } => {
                    let (x, y) = imgs.split_at_mut(1);
                    augment_together(x, &self.augment, &mut self.rng)?;
                    augment_together(y, &self.augment, &mut self.rng)?;
                }
            }
            let [x, y] = imgs;
            xs.push(x);
            ys.push(y);
        }
        self.pos = end;
        let x = Tensor::stack(&xs.iter().collect::<Vec<_>>())?;
        let y = Tensor::stack(&ys.iter().collect::<Vec<_>>())?;
        Ok(match self.dataset {
            Dataset::Paired { .. } => Batch::Paired { input: x, target: y },
            Dataset::Unpaired { .. } => Batch::Unpaired { a: x, b: y },
        })
    }
}

impl<T: Scalar> Iterator for BatchIter<'_, T> {
    type Item = Result<Batch<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.len {
            return None;
        }
        Some(self.next_batch())
    }
}
