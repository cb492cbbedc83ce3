//! Image sets, the flip / jitter augmentation chain, batching and the synthetic
//! desk-scale datasets.

mod augment;
mod batch;
mod synthetic;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use augment::{apply_flip, augment_upsize, flip_draw, flip_horizontal, jitter_at, jitter_offsets, random_flip, random_jitter, AugmentConfig};
pub use batch::{epoch_len, Batch, BatchIter};
pub use synthetic::{render_target, synthetic_paired, synthetic_unpaired};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            _ => Err(Error::invalid("split", format!("unknown split {s:?}"))),
        }
    }
}

/// Interleaved 8-bit RGB pixels, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::shape(
                "rgb_image",
                format!("{width}x{height} needs {} bytes, got {}", width * height * 3, pixels.len()),
            ));
        }
        Ok(RgbImage { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        RgbImage {
            width,
            height,
            pixels: rgb.iter().copied().cycle().take(width * height * 3).collect(),
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Columns `[x0, x0 + width)`.
    pub fn crop_columns(&self, x0: usize, width: usize) -> RgbImage {
        let mut pixels = Vec::with_capacity(width * self.height * 3);
        for y in 0..self.height {
            let row = (y * self.width + x0) * 3;
            pixels.extend_from_slice(&self.pixels[row..row + width * 3]);
        }
        RgbImage {
            width,
            height: self.height,
            pixels,
        }
    }

    /// Split a `2S x S` side-by-side image into its left and right halves.
    pub fn split_halves(&self) -> Result<(RgbImage, RgbImage)> {
        if !self.width.is_multiple_of(2) {
            return Err(Error::shape(
                "split_halves",
                format!("side-by-side image has odd width {}", self.width),
            ));
        }
        let half = self.width / 2;
        Ok((self.crop_columns(0, half), self.crop_columns(half, half)))
    }

    pub fn side_by_side(left: &RgbImage, right: &RgbImage) -> Result<RgbImage> {
        RgbImage::grid(&[&[left, right]])
    }

    /// Tile equally sized images, `rows[r][c]`.
    pub fn grid(rows: &[&[&RgbImage]]) -> Result<RgbImage> {
        let first = rows
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::invalid("grid", "no images"))?;
        let (w, h) = (first.width, first.height);
        let cols = rows[0].len();
        for row in rows {
            if row.len() != cols || row.iter().any(|i| i.width != w || i.height != h) {
                return Err(Error::shape("grid", "tiles differ in size or count"));
            }
        }
        let mut out = RgbImage::filled(w * cols, h * rows.len(), [0; 3]);
        for (r, row) in rows.iter().enumerate() {
            for (c, img) in row.iter().enumerate() {
                for y in 0..h {
                    let src = y * w * 3;
                    let dst = ((r * h + y) * out.width + c * w) * 3;
                    out.pixels[dst..dst + w * 3].copy_from_slice(&img.pixels[src..src + w * 3]);
                }
            }
        }
        Ok(out)
    }

    /// Planar `[3, H, W]` tensor in `[-1, 1]`.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        let plane = self.width * self.height;
        let mut data = alloc::vec![T::zero(); 3 * plane];
        for (i, px) in self.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                data[c * plane + i] = normalize_value(px[c]);
            }
        }
        Tensor::from_vec(&[3, self.height, self.width], data).expect("sized from image")
    }

    /// Inverse of [`Self::to_tensor`] for a `[3, H, W]` or `[1, H, W]` tensor;
    /// values are clamped to `[-1, 1]` and rounded.
    pub fn from_tensor<T: Scalar>(t: &Tensor<T>) -> Result<RgbImage> {
        let (c, h, w) = match t.shape() {
            &[c, h, w] if c == 1 || c == 3 => (c, h, w),
            s => return Err(Error::shape("from_tensor", format!("expected [1|3, H, W], got {s:?}"))),
        };
        let plane = h * w;
        let data = t.data();
        let mut pixels = Vec::with_capacity(plane * 3);
        for i in 0..plane {
            for ch in 0..3 {
                let v = data[(ch % c) * plane + i].as_f64();
                pixels.push(denormalize_value(v));
            }
        }
        Ok(RgbImage {
            width: w,
            height: h,
            pixels,
        })
    }
}

fn normalize_value<T: Scalar>(v: u8) -> T {
    T::from_f64(f64::from(v) / 127.5 - 1.0)
}

fn denormalize_value(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(-1.0, 1.0) };
    num_traits::Float::round((v + 1.0) * 127.5) as u8
}

/// Map 0..=255 pixel values to `[-1, 1]` via `v / 127.5 - 1`.
pub fn normalize<T: Scalar>(shape: &[usize], pixels: &[i32]) -> Result<Tensor<T>> {
    if let Some(bad) = pixels.iter().find(|v| !(0..=255).contains(*v)) {
        return Err(Error::invalid("normalize", format!("pixel value {bad} outside 0..=255")));
    }
    Tensor::from_vec(shape, pixels.iter().map(|&v| normalize_value(v as u8)).collect())
}

/// Images of one domain and split, as `[C, H, W]` tensors in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet<T> {
    images: Vec<Tensor<T>>,
    domain: Domain,
    pairing: Option<Vec<usize>>,
    split: Split,
}

impl<T: Scalar> ImageSet<T> {
    /// Validates that all images share one `[C, H, W]` shape and lie in `[-1, 1]`.
    pub fn new(images: Vec<Tensor<T>>, domain: Domain, split: Split) -> Result<Self> {
        if let Some(first) = images.first() {
            if first.shape().len() != 3 {
                return Err(Error::shape("image_set", format!("images must be [C, H, W], got {:?}", first.shape())));
            }
            for (i, img) in images.iter().enumerate() {
                if img.shape() != first.shape() {
                    return Err(Error::shape(
                        "image_set",
                        format!("image {i} has shape {:?}, expected {:?}", img.shape(), first.shape()),
                    ));
                }
                if img.data().iter().any(|v| !(v.as_f64().abs() <= 1.0)) {
                    return Err(Error::invalid("image_set", format!("image {i} has pixels outside [-1, 1]")));
                }
            }
        }
        Ok(ImageSet {
            images,
            domain,
            pairing: None,
            split,
        })
    }

    pub fn from_rgb(images: &[RgbImage], domain: Domain, split: Split) -> Result<Self> {
        ImageSet::new(images.iter().map(RgbImage::to_tensor).collect(), domain, split)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Tensor<T>] {
        &self.images
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn split(&self) -> Split {
        self.split
    }

    /// Index of the partner image in the other domain, for paired sets.
    pub fn pairing(&self) -> Option<&[usize]> {
        self.pairing.as_deref()
    }

    /// `[C, H, W]` of every image, if any.
    pub fn image_shape(&self) -> Option<&[usize]> {
        self.images.first().map(Tensor::shape)
    }

    pub fn cast<U: Scalar>(&self) -> ImageSet<U> {
        ImageSet {
            images: self.images.iter().map(Tensor::cast).collect(),
            domain: self.domain,
            pairing: self.pairing.clone(),
            split: self.split,
        }
    }
}

/// Training data for either task.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset<T> {
    /// `a.pairing()[i]` indexes the target of input `i` in `b`.
    Paired { a: ImageSet<T>, b: ImageSet<T> },
    Unpaired { a: ImageSet<T>, b: ImageSet<T> },
}

impl<T: Scalar> Dataset<T> {
    /// Pairs `a[i]` with `b[pairing[i]]`; `pairing` must be a permutation.
    pub fn paired(mut a: ImageSet<T>, b: ImageSet<T>, pairing: Vec<usize>) -> Result<Self> {
        if a.len() != b.len() || pairing.len() != a.len() {
            return Err(Error::invalid(
                "paired_dataset",
                format!("{} inputs, {} targets, {} pairing entries", a.len(), b.len(), pairing.len()),
            ));
        }
        let mut seen = alloc::vec![false; pairing.len()];
        for &j in &pairing {
            if j >= seen.len() || core::mem::replace(&mut seen[j], true) {
                return Err(Error::invalid("paired_dataset", "pairing is not a bijection"));
            }
        }
        if a.image_shape() != b.image_shape() {
            return Err(Error::shape(
                "paired_dataset",
                format!("input images {:?} vs targets {:?}", a.image_shape(), b.image_shape()),
            ));
        }
        a.domain = Domain::A;
        a.pairing = Some(pairing);
        Ok(Dataset::Paired { a, b })
    }

    /// Pairs `a[i]` with `b[i]`.
    pub fn aligned(a: ImageSet<T>, b: ImageSet<T>) -> Result<Self> {
        let n = a.len();
        Dataset::paired(a, b, (0..n).collect())
    }

    pub fn unpaired(a: ImageSet<T>, b: ImageSet<T>) -> Result<Self> {
        if a.image_shape().is_some() && b.image_shape().is_some() && a.image_shape() != b.image_shape() {
            return Err(Error::shape(
                "unpaired_dataset",
                format!("domain A images {:?} vs domain B {:?}", a.image_shape(), b.image_shape()),
            ));
        }
        Ok(Dataset::Unpaired { a, b })
    }

    pub fn is_paired(&self) -> bool {
        matches!(self, Dataset::Paired { .. })
    }

    pub fn domains(&self) -> (&ImageSet<T>, &ImageSet<T>) {
        match self {
            Dataset::Paired { a, b } | Dataset::Unpaired { a, b } => (a, b),
        }
    }

    pub fn is_empty(&self) -> bool {
        let (a, b) = self.domains();
        a.is_empty() || b.is_empty()
    }

    pub fn image_shape(&self) -> Option<&[usize]> {
        self.domains().0.image_shape()
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        match self {
            Dataset::Paired { a, b } => Dataset::Paired { a: a.cast(), b: b.cast() },
            Dataset::Unpaired { a, b } => Dataset::Unpaired { a: a.cast(), b: b.cast() },
        }
    }
}
