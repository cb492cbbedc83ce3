use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{BlockRole, BlockSpec, ConvKind, ModelKind, ModelSpec};
use crate::autograd::{Gradients, Graph, Mode, RunningStats, Var};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
struct BlockParams {
    weight: usize,
    bias: Option<usize>,
    affine: Option<(usize, usize)>,
}

/// A [`ModelSpec`] with concrete parameters and batchnorm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    spec: ModelSpec,
    names: Vec<String>,
    params: Vec<Tensor<T>>,
    layout: Vec<BlockParams>,
    stats: Vec<Option<RunningStats<T>>>,
    mode: Mode,
}

/// Parameters of a [`Network`] recorded as leaves of one [`Graph`].
///
/// Binding once and running several forward passes against the same binding
/// makes gradients from every pass accumulate on the same leaves.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Graph nodes standing in for the parameters, in [`Network::parameters`] order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound { vars }
    }
}

fn block_prefixes(spec: &ModelSpec) -> Vec<String> {
    let mut counts = [0usize; 5];
    spec.blocks
        .iter()
        .map(|b| {
            let slot = b.role as usize;
            let name = match b.role {
                BlockRole::Output | BlockRole::Head => String::from(b.role.as_str()),
                _ => format!("{}.{}", b.role.as_str(), counts[slot]),
            };
            counts[slot] += 1;
            name
        })
        .collect()
}

fn weight_shape(b: &BlockSpec) -> [usize; 4] {
    match b.conv {
        ConvKind::Conv => [b.out_channels, b.in_channels, b.kernel, b.kernel],
        ConvKind::ConvTranspose => [b.in_channels, b.out_channels, b.kernel, b.kernel],
    }
}

impl<T: Scalar> Network<T> {
    /// Gaussian weights (std `spec.init_std`), zero biases, unit gamma, zero beta.
    pub fn new(spec: ModelSpec, rng: &mut RngStream) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        let std = net.spec.init_std;
        for p in &net.layout {
            for v in net.params[p.weight].data_mut() {
                *v = T::from_f64(rng.normal(0.0, std));
            }
            if let Some((gamma, _)) = p.affine {
                net.params[gamma].data_mut().fill(T::one());
            }
        }
        Ok(net)
    }

    /// All parameters zero (gamma included), fresh running statistics.
    pub fn zeroed(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let mut names = Vec::new();
        let mut params = Vec::new();
        let mut layout = Vec::new();
        let mut stats = Vec::new();
        let mut add = |name: String, shape: &[usize]| {
            names.push(name);
            params.push(Tensor::zeros(shape));
            params.len() - 1
        };
        for (b, prefix) in spec.blocks.iter().zip(block_prefixes(&spec)) {
            let weight = add(format!("{prefix}.weight"), &weight_shape(b));
            let (bias, affine) = if b.norm {
                let gamma = add(format!("{prefix}.gamma"), &[b.out_channels]);
                let beta = add(format!("{prefix}.beta"), &[b.out_channels]);
                (None, Some((gamma, beta)))
            } else {
                (Some(add(format!("{prefix}.bias"), &[b.out_channels])), None)
            };
            layout.push(BlockParams { weight, bias, affine });
            stats.push(b.norm.then(|| RunningStats::new(b.out_channels)));
        }
        Ok(Network {
            spec,
            names,
            params,
            layout,
            stats,
            mode: Mode::Train,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn parameters(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.params.iter_mut().collect()
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.names
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    /// Parameters followed by batchnorm running statistics, in a stable order.
    pub fn named_tensors(&self) -> Vec<(String, Tensor<T>)> {
        let mut out: Vec<(String, Tensor<T>)> = self
            .names
            .iter()
            .cloned()
            .zip(self.params.iter().cloned())
            .collect();
        for (prefix, stats) in block_prefixes(&self.spec).into_iter().zip(&self.stats) {
            if let Some(s) = stats {
                let c = s.mean.len();
                out.push((
                    format!("{prefix}.running_mean"),
                    Tensor::from_vec(&[c], s.mean.clone()).expect("length c"),
                ));
                out.push((
                    format!("{prefix}.running_var"),
                    Tensor::from_vec(&[c], s.var.clone()).expect("length c"),
                ));
            }
        }
        out
    }

    /// Rebuild a network from `spec` and the exact output of [`Self::named_tensors`].
    pub fn from_named_tensors(spec: ModelSpec, tensors: Vec<(String, Tensor<T>)>) -> Result<Self> {
        let mut net = Self::zeroed(spec)?;
        let expected = net.named_tensors();
        if expected.len() != tensors.len() {
            return Err(Error::SpecMismatch(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, want), (got_name, got)) in expected.iter().zip(&tensors) {
            if name != got_name || want.shape() != got.shape() {
                return Err(Error::SpecMismatch(format!(
                    "expected {name} {:?}, found {got_name} {:?}",
                    want.shape(),
                    got.shape()
                )));
            }
        }
        let mut it = tensors.into_iter().map(|(_, t)| t);
        for p in net.params.iter_mut() {
            *p = it.next().expect("count checked");
        }
        for s in net.stats.iter_mut().flatten() {
            s.mean = it.next().expect("count checked").into_data();
            s.var = it.next().expect("count checked").into_data();
        }
        Ok(net)
    }

    pub fn bind(&self, graph: &mut Graph<T>) -> Bound {
        Bound {
            vars: self.params.iter().map(|p| graph.param(p.clone())).collect(),
        }
    }

    /// Gradients of every parameter, in [`Self::parameters`] order.
    pub fn gradients(&self, graph: &Graph<T>, bound: &Bound, grads: &Gradients<T>) -> Vec<Tensor<T>> {
        bound.vars.iter().map(|&v| grads.get_or_zeros(graph, v)).collect()
    }

    /// Forward pass recorded on `graph`. Train mode also updates the running
    /// statistics of every batchnorm layer.
    pub fn forward(&mut self, graph: &mut Graph<T>, bound: &Bound, input: Var, rng: &mut RngStream) -> Result<Var> {
        if bound.vars.len() != self.params.len() {
            return Err(Error::SpecMismatch("binding belongs to a different network".into()));
        }
        let [_, c, h, w] = graph.value(input).dims4("forward")?;
        if c != self.spec.in_channels {
            return Err(Error::shape(
                "forward",
                format!("{} expects {} input channels, got {c}", self.spec.kind, self.spec.in_channels),
            ));
        }
        if self.spec.kind == ModelKind::Generator {
            let factor = 1usize << self.spec.encoder_depth();
            if h % factor != 0 || w % factor != 0 {
                return Err(Error::shape(
                    "forward",
                    format!("generator of depth {} needs extents divisible by {factor}, got {h}x{w}", self.spec.encoder_depth()),
                ));
            }
        }
        let depth = self.spec.encoder_depth();
        let mut skips: Vec<Var> = Vec::with_capacity(depth);
        let mut decoded = 0;
        let mut h = input;
        for i in 0..self.spec.blocks.len() {
            let role = self.spec.blocks[i].role;
            if role == BlockRole::Decoder && self.spec.skip_connections && decoded > 0 {
                h = graph.concat_channels(h, skips[depth - 1 - decoded])?;
            }
            h = self.block(graph, bound, i, h, rng)?;
            match role {
                BlockRole::Encoder => skips.push(h),
                BlockRole::Decoder => decoded += 1,
                _ => {}
            }
        }
        Ok(h)
    }

    fn block(&mut self, graph: &mut Graph<T>, bound: &Bound, i: usize, x: Var, rng: &mut RngStream) -> Result<Var> {
        let b = self.spec.blocks[i];
        let p = &self.layout[i];
        let weight = bound.vars[p.weight];
        let bias = p.bias.map(|j| bound.vars[j]);
        let mut h = match b.conv {
            ConvKind::Conv => graph.conv2d(x, weight, bias, b.stride, b.padding)?,
            ConvKind::ConvTranspose => graph.conv_transpose2d(x, weight, bias, b.stride, b.padding)?,
        };
        if let (Some((gamma, beta)), Some(stats)) = (p.affine, self.stats[i].as_mut()) {
            h = graph.batchnorm2d(
                h,
                bound.vars[gamma],
                bound.vars[beta],
                self.mode,
                stats,
                self.spec.batchnorm,
            )?;
        }
        h = graph.activation(h, b.activation);
        if b.dropout > 0.0 {
            let mode = if self.spec.dropout_at_inference { Mode::Train } else { self.mode };
            h = graph.dropout(h, b.dropout, mode, rng)?;
        }
        Ok(h)
    }

    /// Forward pass on a throwaway graph; returns only the output value.
    pub fn infer(&mut self, input: &Tensor<T>, rng: &mut RngStream) -> Result<Tensor<T>> {
        let mut graph = Graph::new();
        let bound = Bound {
            vars: self.params.iter().map(|p| graph.constant(p.clone())).collect(),
        };
        let x = graph.constant(input.clone());
        let y = self.forward(&mut graph, &bound, x, rng)?;
        Ok(graph.value(y).clone())
    }

    /// Cast parameters and statistics to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            spec: self.spec.clone(),
            names: self.names.clone(),
            params: self.params.iter().map(Tensor::cast).collect(),
            layout: self.layout.clone(),
            stats: self
                .stats
                .iter()
                .map(|s| {
                    s.as_ref().map(|s| RunningStats {
                        mean: s.mean.iter().map(|v| U::from_f64(v.as_f64())).collect(),
                        var: s.var.iter().map(|v| U::from_f64(v.as_f64())).collect(),
                    })
                })
                .collect(),
            mode: self.mode,
        }
    }
}
