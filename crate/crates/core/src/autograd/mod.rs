//! Reverse-mode automatic differentiation.
//!
//! A [`Graph`] is an append-only tape: every operation pushes a node holding its
//! output value and whatever it needs for its backward rule, so insertion order
//! is a topological order. [`Graph::backward`] walks the tape once in reverse.

mod conv;
mod norm;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use self::conv::Geom;
pub use self::norm::{BatchNormConfig, RunningStats};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(T::zero()),
            Activation::LeakyRelu(slope) => {
                if x > T::zero() {
                    x
                } else {
                    x * T::from_f64(slope)
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through input `x` and output `y`.
    fn derivative<T: Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::LeakyRelu(slope) => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::from_f64(slope)
                }
            }
            Activation::Tanh => T::one() - y * y,
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Train mode uses batch statistics and active dropout; eval mode uses running
/// statistics and disables dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Abs(Var),
    Square(Var),
    Sum(Var),
    Mean(Var),
    Act(Var, Activation),
    Conv {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Geom,
        filters: usize,
    },
    ConvTranspose {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: Geom,
        in_channels: usize,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        mean: Vec<T>,
        inv_std: Vec<T>,
        batch_stats: bool,
    },
    Dropout {
        input: Var,
        mask: Vec<T>,
    },
    Concat {
        a: Var,
        b: Var,
        ca: usize,
        cb: usize,
    },
    BceLogits {
        logits: Var,
        target: T,
    },
    Custom {
        input: Var,
        derivative: fn(T) -> T,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Recorded computation.
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest `|x|` over the inputs of recorded abs, relu and leaky-relu
    /// nodes, the points where those ops are not differentiable. Infinite when
    /// there are none.
    pub fn kink_distance(&self) -> f64 {
        let mut nearest = f64::INFINITY;
        for node in &self.nodes {
            let input = match node.op {
                Op::Abs(x) | Op::Act(x, Activation::Relu | Activation::LeakyRelu(_)) => x,
                _ => continue,
            };
            for v in self.value(input).data() {
                nearest = nearest.min(v.as_f64().abs());
            }
        }
        nearest
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; receives no gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that requires a gradient.
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// New constant leaf carrying `v`'s current value.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::shape(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Tensor<T> {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::from_vec(ta.shape(), data).expect("shapes checked")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.zip(a, b, |x, y| x + y);
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.zip(a, b, |x, y| x - y);
        Ok(self.push(value, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.zip(a, b, |x, y| x * y);
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: T) -> Var {
        let value = self.value(a).map(|x| x * factor);
        self.push(value, Op::Scale(a, factor), &[a])
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.abs());
        self.push(value, Op::Abs(a), &[a])
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x * x);
        self.push(value, Op::Square(a), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Tensor::scalar(self.value(a).sum());
        self.push(value, Op::Sum(a), &[a])
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let value = Tensor::scalar(t.sum() / T::from_f64(t.numel() as f64));
        self.push(value, Op::Mean(a), &[a])
    }

    pub fn activation(&mut self, a: Var, kind: Activation) -> Var {
        if kind == Activation::Identity {
            return a;
        }
        let value = self.value(a).map(|x| kind.apply(x));
        self.push(value, Op::Act(a, kind), &[a])
    }

    /// Elementwise op with a caller-supplied derivative.
    pub fn custom_elementwise(&mut self, a: Var, f: fn(T) -> T, derivative: fn(T) -> T) -> Var {
        let value = self.value(a).map(f);
        self.push(value, Op::Custom { input: a, derivative }, &[a])
    }

    /// Mean binary cross-entropy between `sigmoid(logits)` and a constant target.
    pub fn bce_with_logits(&mut self, logits: Var, target: T) -> Var {
        let t = self.value(logits);
        let total = t.data().iter().fold(T::zero(), |acc, &x| {
            acc + x.max(T::zero()) - x * target + (-x.abs()).exp().ln_1p()
        });
        let value = Tensor::scalar(total / T::from_f64(t.numel() as f64));
        self.push(value, Op::BceLogits { logits, target }, &[logits])
    }

    /// 2-D convolution: input `[N,C,H,W]`, kernel `[F,C,kH,kW]`, bias `[F]`.
    pub fn conv2d(
        &mut self,
        input: Var,
        kernel: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("conv2d")?;
        let [f, kc, kh, kw] = self.value(kernel).dims4("conv2d")?;
        if kc != c {
            return Err(Error::shape(
                "conv2d",
                format!("input has {c} channels, kernel expects {kc}"),
            ));
        }
        self.check_bias("conv2d", bias, f)?;
        if stride == 0 {
            return Err(Error::invalid("conv2d", "stride must be positive"));
        }
        if kh > h + 2 * padding || kw > w + 2 * padding {
            return Err(Error::shape(
                "conv2d",
                format!("kernel {kh}x{kw} exceeds padded input {}x{}", h + 2 * padding, w + 2 * padding),
            ));
        }
        let geom = Geom {
            channels: c,
            in_h: h,
            in_w: w,
            kh,
            kw,
            stride,
            pad: padding,
            out_h: (h + 2 * padding - kh) / stride + 1,
            out_w: (w + 2 * padding - kw) / stride + 1,
        };
        let out = conv::conv_forward(
            &geom,
            n,
            self.value(input).data(),
            self.value(kernel).data(),
            bias.map(|b| self.value(b).data()),
            f,
        );
        let value = Tensor::from_vec(&[n, f, geom.out_h, geom.out_w], out)?;
        let mut inputs = vec![input, kernel];
        inputs.extend(bias);
        Ok(self.push(
            value,
            Op::Conv {
                input,
                weight: kernel,
                bias,
                geom,
                filters: f,
            },
            &inputs,
        ))
    }

    /// Transposed 2-D convolution: input `[N,C,H,W]`, kernel `[C,F,kH,kW]`,
    /// bias `[F]`; output extent `(H-1)*stride - 2*padding + kH`.
    pub fn conv_transpose2d(
        &mut self,
        input: Var,
        kernel: Var,
        bias: Option<Var>,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("conv_transpose2d")?;
        let [kc, f, kh, kw] = self.value(kernel).dims4("conv_transpose2d")?;
        if kc != c {
            return Err(Error::shape(
                "conv_transpose2d",
                format!("input has {c} channels, kernel expects {kc}"),
            ));
        }
        self.check_bias("conv_transpose2d", bias, f)?;
        if stride == 0 {
            return Err(Error::invalid("conv_transpose2d", "stride must be positive"));
        }
        let out_h = ((h - 1) * stride + kh).checked_sub(2 * padding).filter(|&v| v > 0);
        let out_w = ((w - 1) * stride + kw).checked_sub(2 * padding).filter(|&v| v > 0);
        let (Some(out_h), Some(out_w)) = (out_h, out_w) else {
            return Err(Error::shape(
                "conv_transpose2d",
                format!("padding {padding} leaves no output for {h}x{w} input and {kh}x{kw} kernel"),
            ));
        };
        let geom = Geom {
            channels: f,
            in_h: out_h,
            in_w: out_w,
            kh,
            kw,
            stride,
            pad: padding,
            out_h: h,
            out_w: w,
        };
        let out = conv::conv_transpose_forward(
            &geom,
            n,
            self.value(input).data(),
            c,
            self.value(kernel).data(),
            bias.map(|b| self.value(b).data()),
        );
        let value = Tensor::from_vec(&[n, f, out_h, out_w], out)?;
        let mut inputs = vec![input, kernel];
        inputs.extend(bias);
        Ok(self.push(
            value,
            Op::ConvTranspose {
                input,
                weight: kernel,
                bias,
                geom,
                in_channels: c,
            },
            &inputs,
        ))
    }

    fn check_bias(&self, op: &'static str, bias: Option<Var>, filters: usize) -> Result<()> {
        if let Some(b) = bias {
            if self.value(b).shape() != [filters] {
                return Err(Error::shape(
                    op,
                    format!("bias shape {:?}, expected [{filters}]", self.value(b).shape()),
                ));
            }
        }
        Ok(())
    }

    /// Per-channel batch normalization of `[N,C,H,W]`.
    ///
    /// In [`Mode::Train`] the batch statistics normalize the input and are folded
    /// into `running` with the configured momentum; in [`Mode::Eval`] `running`
    /// is used as is.
    pub fn batchnorm2d(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        mode: Mode,
        running: &mut RunningStats<T>,
        cfg: BatchNormConfig,
    ) -> Result<Var> {
        let dims = self.value(input).dims4("batchnorm2d")?;
        let c = dims[1];
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if self.value(v).shape() != [c] {
                return Err(Error::shape(
                    "batchnorm2d",
                    format!("{name} shape {:?}, expected [{c}]", self.value(v).shape()),
                ));
            }
        }
        if running.mean.len() != c || running.var.len() != c {
            return Err(Error::shape(
                "batchnorm2d",
                format!("running stats hold {} channels, input has {c}", running.mean.len()),
            ));
        }
        let fwd = norm::forward(
            dims,
            self.value(input).data(),
            self.value(gamma).data(),
            self.value(beta).data(),
            mode,
            running,
            cfg,
        )?;
        let value = Tensor::from_vec(self.value(input).shape(), fwd.output)?;
        Ok(self.push(
            value,
            Op::BatchNorm {
                input,
                gamma,
                beta,
                mean: fwd.mean,
                inv_std: fwd.inv_std,
                batch_stats: mode == Mode::Train,
            },
            &[input, gamma, beta],
        ))
    }

    /// Inverted dropout: zero each element with probability `rate`, scale
    /// survivors by `1/(1-rate)`. Identity in eval mode or at rate 0.
    pub fn dropout(&mut self, input: Var, rate: f64, mode: Mode, rng: &mut RngStream) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid("dropout", format!("rate {rate} outside [0, 1)")));
        }
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(input);
        }
        let keep = T::from_f64(1.0 / (1.0 - rate));
        let mask: Vec<T> = (0..self.value(input).numel())
            .map(|_| if rng.uniform() < rate { T::zero() } else { keep })
            .collect();
        let t = self.value(input);
        let data = t.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect();
        let value = Tensor::from_vec(t.shape(), data)?;
        Ok(self.push(value, Op::Dropout { input, mask }, &[input]))
    }

    /// Concatenate `[N,Ca,H,W]` and `[N,Cb,H,W]` along channels.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let [n, ca, h, w] = self.value(a).dims4("concat_channels")?;
        let [nb, cb, hb, wb] = self.value(b).dims4("concat_channels")?;
        if (n, h, w) != (nb, hb, wb) {
            return Err(Error::shape(
                "concat_channels",
                format!("[{n},_,{h},{w}] vs [{nb},_,{hb},{wb}]"),
            ));
        }
        if cb == 0 {
            return Ok(a);
        }
        if ca == 0 {
            return Ok(b);
        }
        let plane = h * w;
        let (da, db) = (self.value(a).data(), self.value(b).data());
        let mut data = Vec::with_capacity(n * (ca + cb) * plane);
        for i in 0..n {
            data.extend_from_slice(&da[i * ca * plane..(i + 1) * ca * plane]);
            data.extend_from_slice(&db[i * cb * plane..(i + 1) * cb * plane]);
        }
        let value = Tensor::from_vec(&[n, ca + cb, h, w], data)?;
        Ok(self.push(value, Op::Concat { a, b, ca, cb }, &[a, b]))
    }

    /// Gradients of the scalar `loss` with respect to every node that depends on
    /// a parameter leaf. Contributions from multiple uses of a node add up.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lt = self.value(loss);
        if lt.numel() != 1 {
            return Err(Error::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = Vec::new();
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(Tensor::full(lt.shape(), T::one()));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        grads.resize_with(self.nodes.len(), || None);
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
        if !self.nodes[v.0].needs_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => {
                for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                    *a = *a + b;
                }
            }
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node<T>, g: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) -> Result<()> {
        let shape = node.value.shape();
        let mk = |data: Vec<T>, like: Var| Tensor::from_vec(self.value(like).shape(), data);
        match node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, a, g.clone());
                self.accumulate(grads, b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, a, g.clone());
                self.accumulate(grads, b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(a).data(), self.value(b).data());
                if self.requires_grad(a) {
                    let d = g.data().iter().zip(vb).map(|(&g, &y)| g * y).collect();
                    self.accumulate(grads, a, Tensor::from_vec(shape, d)?);
                }
                if self.requires_grad(b) {
                    let d = g.data().iter().zip(va).map(|(&g, &x)| g * x).collect();
                    self.accumulate(grads, b, Tensor::from_vec(shape, d)?);
                }
            }
            Op::Scale(a, factor) => self.accumulate(grads, a, g.map(|x| x * factor)),
            Op::Abs(a) => {
                let d = g
                    .data()
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(&g, &x)| {
                        if x > T::zero() {
                            g
                        } else if x < T::zero() {
                            -g
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                self.accumulate(grads, a, mk(d, a)?);
            }
            Op::Square(a) => {
                let two = T::from_f64(2.0);
                let d = g
                    .data()
                    .iter()
                    .zip(self.value(a).data())
                    .map(|(&g, &x)| two * x * g)
                    .collect();
                self.accumulate(grads, a, mk(d, a)?);
            }
            Op::Sum(a) => {
                let t = Tensor::full(self.value(a).shape(), g.item());
                self.accumulate(grads, a, t);
            }
            Op::Mean(a) => {
                let n = T::from_f64(self.value(a).numel() as f64);
                let t = Tensor::full(self.value(a).shape(), g.item() / n);
                self.accumulate(grads, a, t);
            }
            Op::Act(a, kind) => {
                let d = g
                    .data()
                    .iter()
                    .zip(self.value(a).data())
                    .zip(node.value.data())
                    .map(|((&g, &x), &y)| g * kind.derivative(x, y))
                    .collect();
                self.accumulate(grads, a, mk(d, a)?);
            }
            Op::Custom { input, derivative } => {
                let d = g
                    .data()
                    .iter()
                    .zip(self.value(input).data())
                    .map(|(&g, &x)| g * derivative(x))
                    .collect();
                self.accumulate(grads, input, mk(d, input)?);
            }
            Op::BceLogits { logits, target } => {
                let t = self.value(logits);
                let scale = g.item() / T::from_f64(t.numel() as f64);
                let d = t.map(|x| (sigmoid(x) - target) * scale);
                self.accumulate(grads, logits, d);
            }
            Op::Dropout { input, ref mask } => {
                let d = g.data().iter().zip(mask).map(|(&g, &m)| g * m).collect();
                self.accumulate(grads, input, mk(d, input)?);
            }
            Op::Concat { a, b, ca, cb } => {
                let [n, _, h, w] = g.dims4("concat_channels")?;
                let plane = h * w;
                let mut ga = Vec::with_capacity(n * ca * plane);
                let mut gb = Vec::with_capacity(n * cb * plane);
                for chunk in g.data().chunks((ca + cb) * plane) {
                    ga.extend_from_slice(&chunk[..ca * plane]);
                    gb.extend_from_slice(&chunk[ca * plane..]);
                }
                self.accumulate(grads, a, mk(ga, a)?);
                self.accumulate(grads, b, mk(gb, b)?);
            }
            Op::Conv {
                input,
                weight,
                bias,
                geom,
                filters,
            } => {
                let n = self.value(input).shape()[0];
                let (dx, dw, db) = conv::conv_backward(
                    &geom,
                    n,
                    self.value(input).data(),
                    self.value(weight).data(),
                    filters,
                    g.data(),
                    self.requires_grad(input),
                );
                if let Some(dx) = dx {
                    self.accumulate(grads, input, mk(dx, input)?);
                }
                self.accumulate(grads, weight, mk(dw, weight)?);
                if let Some(b) = bias {
                    self.accumulate(grads, b, mk(db, b)?);
                }
            }
            Op::ConvTranspose {
                input,
                weight,
                bias,
                geom,
                in_channels,
            } => {
                let n = self.value(input).shape()[0];
                let (dx, dw, db) = conv::conv_transpose_backward(
                    &geom,
                    n,
                    self.value(input).data(),
                    in_channels,
                    self.value(weight).data(),
                    g.data(),
                    self.requires_grad(input),
                );
                if let Some(dx) = dx {
                    self.accumulate(grads, input, mk(dx, input)?);
                }
                self.accumulate(grads, weight, mk(dw, weight)?);
                if let Some(b) = bias {
                    self.accumulate(grads, b, mk(db, b)?);
                }
            }
            Op::BatchNorm {
                input,
                gamma,
                beta,
                ref mean,
                ref inv_std,
                batch_stats,
            } => {
                let dims = self.value(input).dims4("batchnorm2d")?;
                let back = norm::backward(
                    dims,
                    self.value(input).data(),
                    self.value(gamma).data(),
                    mean,
                    inv_std,
                    batch_stats,
                    g.data(),
                );
                self.accumulate(grads, input, mk(back.d_input, input)?);
                self.accumulate(grads, gamma, mk(back.d_gamma, gamma)?);
                self.accumulate(grads, beta, mk(back.d_beta, beta)?);
            }
        }
        Ok(())
    }
}

/// Result of [`Graph::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// `None` when `v` did not take part in the loss.
    pub fn get(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of `v`, all-zero when `v` did not take part in the loss.
    pub fn get_or_zeros(&self, graph: &Graph<T>, v: Var) -> Tensor<T> {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(graph.value(v).shape()))
    }
}
