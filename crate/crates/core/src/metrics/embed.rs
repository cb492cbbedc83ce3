use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{FeatureSet, Source};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Deterministic map from an image to a feature vector.
pub trait Embedder {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn embed(&self, image: &[f64]) -> Result<Vec<f64>>;

    /// Embed every `[C, H, W]` image.
    fn embed_all<T: Scalar>(&self, images: &[Tensor<T>], source: Source) -> Result<FeatureSet>
    where
        Self: Sized,
    {
        let mut data = Vec::with_capacity(images.len() * self.dim());
        for img in images {
            data.extend(self.embed(&img.to_f64_vec())?);
        }
        FeatureSet::new(self.dim(), data, source)
    }
}

/// Projection of flattened pixels onto `dim` seeded Gaussian directions, each
/// scaled to unit length so every output coordinate has the same scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    seed: u64,
    input_dim: usize,
    dim: usize,
    rows: Vec<f64>,
}

impl RandomProjection {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(input_dim: usize, dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || dim == 0 {
            return Err(Error::invalid("random_projection", "dimensions must be positive"));
        }
        let mut rng = RngStream::new(seed);
        let mut rows: Vec<f64> = (0..input_dim * dim).map(|_| rng.normal(0.0, 1.0)).collect();
        for row in rows.chunks_exact_mut(input_dim) {
            let norm = num_traits::Float::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(RandomProjection {
            seed,
            input_dim,
            dim,
            rows,
        })
    }
}

impl Embedder for RandomProjection {
    fn name(&self) -> String {
        format!("random_projection(d={},seed={})", self.dim, self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, image: &[f64]) -> Result<Vec<f64>> {
        if image.len() != self.input_dim {
            return Err(Error::shape(
                "embed",
                format!("projection expects {} values, got {}", self.input_dim, image.len()),
            ));
        }
        Ok(self
            .rows
            .chunks_exact(self.input_dim)
            .map(|row| row.iter().zip(image).fold(0.0, |acc, (w, x)| acc + w * x))
            .collect())
    }
}
