use alloc::format;
use alloc::vec::Vec;

use super::RgbImage;
use crate::error::{Error, Result};
use crate::rng::RngStream;

const LABELS: [[u8; 3]; 6] = [
    [20, 20, 20],
    [220, 40, 40],
    [40, 200, 60],
    [50, 80, 230],
    [230, 210, 40],
    [200, 60, 210],
];

fn check_size(size: usize) -> Result<()> {
    if size < 16 || !size.is_power_of_two() {
        return Err(Error::invalid("synthetic", format!("image size {size} is not a power of two >= 16")));
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Shape {
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    Disc { cx: usize, cy: usize, r: usize },
}

impl Shape {
    fn contains(self, x: usize, y: usize) -> bool {
        match self {
            Shape::Rect { x0, y0, x1, y1 } => (x0..x1).contains(&x) && (y0..y1).contains(&y),
            Shape::Disc { cx, cy, r } => {
                let dx = x.abs_diff(cx);
                let dy = y.abs_diff(cy);
                dx * dx + dy * dy <= r * r
            }
        }
    }
}

fn random_rect(size: usize, rng: &mut RngStream) -> Shape {
    let lo = (size / 8).max(2) as u32;
    let hi = (size / 2) as u32;
    let w = rng.int_inclusive(lo, hi) as usize;
    let h = rng.int_inclusive(lo, hi) as usize;
    let x0 = rng.int_inclusive(0, (size - w) as u32) as usize;
    let y0 = rng.int_inclusive(0, (size - h) as u32) as usize;
    Shape::Rect {
        x0,
        y0,
        x1: x0 + w,
        y1: y0 + h,
    }
}

fn random_shape(size: usize, rng: &mut RngStream) -> Shape {
    if rng.int_inclusive(0, 1) == 0 {
        return random_rect(size, rng);
    }
    let r = rng.int_inclusive((size / 8).max(2) as u32, (size / 4) as u32) as usize;
    let cx = rng.int_inclusive(r as u32, (size - r - 1) as u32) as usize;
    let cy = rng.int_inclusive(r as u32, (size - r - 1) as u32) as usize;
    Shape::Disc { cx, cy, r }
}

fn label_map(size: usize, rng: &mut RngStream) -> RgbImage {
    let mut img = RgbImage::filled(size, size, LABELS[0]);
    let count = rng.int_inclusive(2, 5);
    for _ in 0..count {
        let shape = random_rect(size, rng);
        let color = LABELS[rng.int_inclusive(1, LABELS.len() as u32 - 1) as usize];
        for y in 0..size {
            for x in 0..size {
                if shape.contains(x, y) {
                    img.set(x, y, color);
                }
            }
        }
    }
    img
}

/// Deterministic rendering of a label map: each colour maps to a fill colour and
/// pixels on a region boundary (any 4-neighbour of another colour) are darkened.
pub fn render_target(labels: &RgbImage) -> RgbImage {
    let (w, h) = (labels.width, labels.height);
    let mut out = labels.clone();
    for y in 0..h {
        for x in 0..w {
            let c = labels.get(x, y);
            let fill = [255 - c[2], c[0] / 2 + 40, c[1] / 2 + 64];
            let mut neighbours = [None; 4];
            if x > 0 {
                neighbours[0] = Some(labels.get(x - 1, y));
            }
            if x + 1 < w {
                neighbours[1] = Some(labels.get(x + 1, y));
            }
            if y > 0 {
                neighbours[2] = Some(labels.get(x, y - 1));
            }
            if y + 1 < h {
                neighbours[3] = Some(labels.get(x, y + 1));
            }
            let border = neighbours.iter().flatten().any(|&n| n != c);
            let px = if border { fill.map(|v| v / 3) } else { fill };
            out.set(x, y, px);
        }
    }
    out
}

/// `n` aligned pairs: a random rectangle label map and its rendering.
pub fn synthetic_paired(n: usize, size: usize, seed: u64) -> Result<Vec<(RgbImage, RgbImage)>> {
    check_size(size)?;
    let mut rng = RngStream::new(seed);
    Ok((0..n)
        .map(|_| {
            let a = label_map(size, &mut rng);
            let b = render_target(&a);
            (a, b)
        })
        .collect())
}

#[derive(Clone, Copy)]
enum Texture {
    Stripes,
    Dots,
}

fn textured(size: usize, texture: Texture, rng: &mut RngStream) -> RgbImage {
    let (background, ink) = match texture {
        Texture::Stripes => ([40, 40, 48], [250, 250, 250]),
        Texture::Dots => ([210, 210, 225], [10, 10, 60]),
    };
    let mut img = RgbImage::filled(size, size, background);
    let count = rng.int_inclusive(1, 3);
    for _ in 0..count {
        let shape = random_shape(size, rng);
        let base = LABELS[rng.int_inclusive(1, LABELS.len() as u32 - 1) as usize];
        for y in 0..size {
            for x in 0..size {
                if !shape.contains(x, y) {
                    continue;
                }
                let marked = match texture {
                    Texture::Stripes => (y / 2) % 2 == 0,
                    Texture::Dots => x % 4 < 2 && y % 4 < 2,
                };
                img.set(x, y, if marked { ink } else { base });
            }
        }
    }
    img
}

/// Two unrelated image families sharing shape statistics: striped shapes on a
/// dark ground (domain A) and dotted shapes on a light ground (domain B).
pub fn synthetic_unpaired(n_a: usize, n_b: usize, size: usize, seed: u64) -> Result<(Vec<RgbImage>, Vec<RgbImage>)> {
    check_size(size)?;
    let mut rng = RngStream::new(seed);
    let a = (0..n_a).map(|_| textured(size, Texture::Stripes, &mut rng)).collect();
    let b = (0..n_b).map(|_| textured(size, Texture::Dots, &mut rng)).collect();
    Ok((a, b))
}
