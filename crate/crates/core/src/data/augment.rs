use alloc::format;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Random flip and resize-then-crop jitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentConfig {
    pub flip: bool,
    pub jitter: bool,
    /// Side length images are upsized to before the crop back.
    pub jitter_upsize: usize,
}

impl AugmentConfig {
    pub fn disabled(size: usize) -> Self {
        AugmentConfig {
            flip: false,
            jitter: false,
            jitter_upsize: size,
        }
    }

    /// Flip and jitter on, upsizing in the ratio 286 / 256.
    pub fn standard(size: usize) -> Self {
        AugmentConfig {
            flip: true,
            jitter: true,
            jitter_upsize: augment_upsize(size),
        }
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        if self.jitter_upsize < size {
            return Err(Error::invalid(
                "augment",
                format!("jitter_upsize {} is smaller than the image extent {size}", self.jitter_upsize),
            ));
        }
        Ok(())
    }

    pub fn is_identity(&self, size: usize) -> bool {
        !self.flip && (!self.jitter || self.jitter_upsize == size)
    }
}

pub fn augment_upsize(size: usize) -> usize {
    (size * 286 + 128) / 256
}

/// Mirror every row of a `[C, H, W]` tensor.
pub fn flip_horizontal<T: Scalar>(img: &Tensor<T>) -> Tensor<T> {
    let w = *img.shape().last().expect("image tensors have a width");
    let mut out = img.clone();
    for row in out.data_mut().chunks_exact_mut(w.max(1)) {
        row.reverse();
    }
    out
}

/// Uniform integer in `[0, 100]`.
pub fn flip_draw(rng: &mut RngStream) -> u32 {
    rng.int_inclusive(0, 100)
}

/// Flip iff `draw > 50`.
pub fn apply_flip<T: Scalar>(img: &Tensor<T>, draw: u32) -> Tensor<T> {
    if draw > 50 {
        flip_horizontal(img)
    } else {
        img.clone()
    }
}

pub fn random_flip<T: Scalar>(img: &Tensor<T>, rng: &mut RngStream) -> Tensor<T> {
    apply_flip(img, flip_draw(rng))
}

/// Crop offsets `(y, x)`, each uniform in `[0, upsize - size]`.
pub fn jitter_offsets(size: usize, upsize: usize, rng: &mut RngStream) -> (usize, usize) {
    let span = (upsize - size) as u32;
    let y = rng.int_inclusive(0, span) as usize;
    let x = rng.int_inclusive(0, span) as usize;
    (y, x)
}

/// Nearest-neighbour upsize of a `[C, S, S]` image to `upsize`, then the
/// `S x S` window at `offset`.
pub fn jitter_at<T: Scalar>(img: &Tensor<T>, upsize: usize, offset: (usize, usize)) -> Result<Tensor<T>> {
    let &[c, h, w] = img.shape() else {
        return Err(Error::shape("jitter", format!("expected [C, H, W], got {:?}", img.shape())));
    };
    if h != w {
        return Err(Error::shape("jitter", format!("expected a square image, got {h}x{w}")));
    }
    if upsize < h || offset.0 > upsize - h || offset.1 > upsize - h {
        return Err(Error::invalid(
            "jitter",
            format!("window {offset:?} of size {h} does not fit in {upsize}"),
        ));
    }
    let src = img.data();
    let mut out = Tensor::zeros(img.shape());
    let dst = out.data_mut();
    for ch in 0..c {
        for y in 0..h {
            let sy = (y + offset.0) * h / upsize;
            for x in 0..w {
                let sx = (x + offset.1) * w / upsize;
                dst[(ch * h + y) * w + x] = src[(ch * h + sy) * w + sx];
            }
        }
    }
    Ok(out)
}

pub fn random_jitter<T: Scalar>(img: &Tensor<T>, cfg: &AugmentConfig, rng: &mut RngStream) -> Result<Tensor<T>> {
    let size = img.shape()[1];
    cfg.validate(size)?;
    let offset = jitter_offsets(size, cfg.jitter_upsize, rng);
    jitter_at(img, cfg.jitter_upsize, offset)
}

/// Jitter then flip, with one set of draws shared by every image in `imgs`.
pub(crate) fn augment_together<T: Scalar>(
    imgs: &mut [Tensor<T>],
    cfg: &AugmentConfig,
    rng: &mut RngStream,
) -> Result<()> {
    let Some(size) = imgs.first().map(|i| i.shape()[1]) else {
        return Ok(());
    };
    if cfg.jitter {
        cfg.validate(size)?;
        let offset = jitter_offsets(size, cfg.jitter_upsize, rng);
        for img in imgs.iter_mut() {
            *img = jitter_at(img, cfg.jitter_upsize, offset)?;
        }
    }
    if cfg.flip {
        let draw = flip_draw(rng);
        for img in imgs.iter_mut() {
            *img = apply_flip(img, draw);
        }
    }
    Ok(())
}
