//! im2col / col2im convolution kernels.
//!
//! `conv2d` lowers each sample to a matrix product against an unfolded column
//! buffer; `conv_transpose2d` is the exact adjoint, so both directions share the
//! same two kernels with the roles of forward and backward swapped.

use alloc::vec;
use alloc::vec::Vec;

use crate::scalar::Scalar;

/// Sliding-window geometry between an image `[channels, in_h, in_w]` and its
/// column matrix `[channels * kh * kw, out_h * out_w]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Geom {
    pub channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl Geom {
    pub fn rows(&self) -> usize {
        self.channels * self.kh * self.kw
    }

    pub fn cols(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn image_len(&self) -> usize {
        self.channels * self.in_h * self.in_w
    }

    /// Input coordinate hit by output position `o` and kernel tap `k`.
    #[inline]
    fn src(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        let pos = (o * self.stride + k).checked_sub(self.pad)?;
        (pos < extent).then_some(pos)
    }
}

pub(crate) fn im2col<T: Scalar>(g: &Geom, image: &[T], cols: &mut [T]) {
    debug_assert_eq!(image.len(), g.image_len());
    debug_assert_eq!(cols.len(), g.rows() * g.cols());
    let ncols = g.cols();
    for c in 0..g.channels {
        let plane = &image[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let row = (c * g.kh + ky) * g.kw + kx;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for oy in 0..g.out_h {
                    let line = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                    match g.src(oy, ky, g.in_h) {
                        None => line.fill(T::zero()),
                        Some(iy) => {
                            let src = &plane[iy * g.in_w..(iy + 1) * g.in_w];
                            for (ox, v) in line.iter_mut().enumerate() {
                                *v = match g.src(ox, kx, g.in_w) {
                                    Some(ix) => src[ix],
                                    None => T::zero(),
                                };
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into `image`.
pub(crate) fn col2im<T: Scalar>(g: &Geom, cols: &[T], image: &mut [T]) {
    debug_assert_eq!(image.len(), g.image_len());
    debug_assert_eq!(cols.len(), g.rows() * g.cols());
    let ncols = g.cols();
    for c in 0..g.channels {
        let plane = &mut image[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let row = (c * g.kh + ky) * g.kw + kx;
                let src = &cols[row * ncols..(row + 1) * ncols];
                for oy in 0..g.out_h {
                    let Some(iy) = g.src(oy, ky, g.in_h) else {
                        continue;
                    };
                    let dst = &mut plane[iy * g.in_w..(iy + 1) * g.in_w];
                    for ox in 0..g.out_w {
                        if let Some(ix) = g.src(ox, kx, g.in_w) {
                            dst[ix] = dst[ix] + src[oy * g.out_w + ox];
                        }
                    }
                }
            }
        }
    }
}

/// Convolution forward over a batch. `weight` is `[f, g.rows()]` row-major.
pub(crate) fn conv_forward<T: Scalar>(
    g: &Geom,
    batch: usize,
    input: &[T],
    weight: &[T],
    bias: Option<&[T]>,
    filters: usize,
) -> Vec<T> {
    let (rows, ncols) = (g.rows(), g.cols());
    let mut out = vec![T::zero(); batch * filters * ncols];
    let mut cols = vec![T::zero(); rows * ncols];
    for n in 0..batch {
        im2col(g, &input[n * g.image_len()..(n + 1) * g.image_len()], &mut cols);
        let dst = &mut out[n * filters * ncols..(n + 1) * filters * ncols];
        if let Some(b) = bias {
            for (f, chunk) in dst.chunks_mut(ncols).enumerate() {
                chunk.fill(b[f]);
            }
        }
        T::gemm(
            filters,
            rows,
            ncols,
            T::one(),
            (weight, rows, 1),
            (&cols, ncols, 1),
            T::one(),
            (dst, ncols, 1),
        );
    }
    out
}

/// Gradients of [`conv_forward`]: `(d_input, d_weight, d_bias)`; `d_input` only
/// when requested.
#[allow(clippy::type_complexity)]
pub(crate) fn conv_backward<T: Scalar>(
    g: &Geom,
    batch: usize,
    input: &[T],
    weight: &[T],
    filters: usize,
    grad_out: &[T],
    want_input: bool,
) -> (Option<Vec<T>>, Vec<T>, Vec<T>) {
    let (rows, ncols) = (g.rows(), g.cols());
    let mut d_weight = vec![T::zero(); filters * rows];
    let mut d_bias = vec![T::zero(); filters];
    let mut d_input = want_input.then(|| vec![T::zero(); batch * g.image_len()]);
    let mut cols = vec![T::zero(); rows * ncols];
    for n in 0..batch {
        let go = &grad_out[n * filters * ncols..(n + 1) * filters * ncols];
        for (f, chunk) in go.chunks(ncols).enumerate() {
            d_bias[f] = chunk.iter().fold(d_bias[f], |a, &v| a + v);
        }
        im2col(g, &input[n * g.image_len()..(n + 1) * g.image_len()], &mut cols);
        T::gemm(
            filters,
            ncols,
            rows,
            T::one(),
            (go, ncols, 1),
            (&cols, 1, ncols),
            T::one(),
            (&mut d_weight, rows, 1),
        );
        if let Some(dx) = d_input.as_mut() {
            T::gemm(
                rows,
                filters,
                ncols,
                T::one(),
                (weight, 1, rows),
                (go, ncols, 1),
                T::zero(),
                (&mut cols, ncols, 1),
            );
            col2im(g, &cols, &mut dx[n * g.image_len()..(n + 1) * g.image_len()]);
        }
    }
    (d_input, d_weight, d_bias)
}

/// Transposed convolution forward. `g` describes the adjoint convolution mapping
/// the *output* image `[filters, out_h', out_w']` (stored in `g.in_*`) onto the
/// input grid (`g.out_*`). `weight` is `[in_channels, g.rows()]`.
pub(crate) fn conv_transpose_forward<T: Scalar>(
    g: &Geom,
    batch: usize,
    input: &[T],
    in_channels: usize,
    weight: &[T],
    bias: Option<&[T]>,
) -> Vec<T> {
    let (rows, ncols) = (g.rows(), g.cols());
    let plane = g.in_h * g.in_w;
    let mut out = vec![T::zero(); batch * g.image_len()];
    let mut cols = vec![T::zero(); rows * ncols];
    for n in 0..batch {
        let x = &input[n * in_channels * ncols..(n + 1) * in_channels * ncols];
        T::gemm(
            rows,
            in_channels,
            ncols,
            T::one(),
            (weight, 1, rows),
            (x, ncols, 1),
            T::zero(),
            (&mut cols, ncols, 1),
        );
        let dst = &mut out[n * g.image_len()..(n + 1) * g.image_len()];
        col2im(g, &cols, dst);
        if let Some(b) = bias {
            for (f, chunk) in dst.chunks_mut(plane).enumerate() {
                for v in chunk {
                    *v = *v + b[f];
                }
            }
        }
    }
    out
}

#[allow(clippy::type_complexity)]
pub(crate) fn conv_transpose_backward<T: Scalar>(
    g: &Geom,
    batch: usize,
    input: &[T],
    in_channels: usize,
    weight: &[T],
    grad_out: &[T],
    want_input: bool,
) -> (Option<Vec<T>>, Vec<T>, Vec<T>) {
    let (rows, ncols) = (g.rows(), g.cols());
    let plane = g.in_h * g.in_w;
    let mut d_weight = vec![T::zero(); in_channels * rows];
    let mut d_bias = vec![T::zero(); g.channels];
    let mut d_input = want_input.then(|| vec![T::zero(); batch * in_channels * ncols]);
    let mut cols = vec![T::zero(); rows * ncols];
    for n in 0..batch {
        let go = &grad_out[n * g.image_len()..(n + 1) * g.image_len()];
        for (f, chunk) in go.chunks(plane).enumerate() {
            d_bias[f] = chunk.iter().fold(d_bias[f], |a, &v| a + v);
        }
        im2col(g, go, &mut cols);
        let x = &input[n * in_channels * ncols..(n + 1) * in_channels * ncols];
        T::gemm(
            in_channels,
            ncols,
            rows,
            T::one(),
            (x, ncols, 1),
            (&cols, 1, ncols),
            T::one(),
            (&mut d_weight, rows, 1),
        );
        if let Some(dx) = d_input.as_mut() {
            let dst = &mut dx[n * in_channels * ncols..(n + 1) * in_channels * ncols];
            T::gemm(
                in_channels,
                rows,
                ncols,
                T::one(),
                (weight, rows, 1),
                (&cols, ncols, 1),
                T::zero(),
                (dst, ncols, 1),
            );
        }
    }
    (d_input, d_weight, d_bias)
}
