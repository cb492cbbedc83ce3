//! Central finite-difference certification of every differentiable op.
//!
//! Each trial draws random inputs, reduces the op output to a scalar with a
//! random weighting, and compares backward gradients against central
//! differences. Trials are drawn one after another from a single seeded
//! stream, so running more trials only ever adds cases.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::autograd::{Activation, BatchNormConfig, Graph, Mode, RunningStats, Var};
use crate::error::{Error, Result};
use crate::models::{build_patchgan, build_unet_generator, PatchVariant};
use crate::rng::RngStream;
use crate::tensor::Tensor;
use crate::training::{gan_loss_discriminator, gan_loss_generator, recon_loss, ReconKind};

/// Central-difference step.
pub const STEP: f64 = 1e-5;
/// Largest accepted relative error.
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor of the relative error, so gradients near zero are
/// compared absolutely.
pub const FLOOR: f64 = 1e-3;
/// Coordinates checked per input tensor and trial; larger tensors are sampled.
const COORDS: usize = 48;
const KINK_MARGIN: f64 = 1e-3;
const REDRAWS: usize = 1000;

type Forward = Box<dyn Fn(&mut Graph<f64>, &[Var]) -> Result<Var>>;

struct Case {
    inputs: Vec<Tensor<f64>>,
    forward: Forward,
}

/// A named op under test.
pub struct GradOp {
    pub name: &'static str,
    build: fn(&mut RngStream) -> Result<Case>,
}

/// Outcome for one op.
#[derive(Debug, Clone, PartialEq)]
pub struct OpReport {
    pub name: &'static str,
    pub trials: usize,
    pub max_rel_error: f64,
}

impl OpReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

fn normal(rng: &mut RngStream, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.normal(0.0, 1.0)).collect()).expect("sized from shape")
}

/// Values bounded away from zero, for ops with a kink there.
fn off_zero(rng: &mut RngStream, shape: &[usize]) -> Tensor<f64> {
    normal(rng, shape).map(|v| if v < 0.0 { v - 0.1 } else { v + 0.1 })
}

fn case(inputs: Vec<Tensor<f64>>, forward: impl Fn(&mut Graph<f64>, &[Var]) -> Result<Var> + 'static) -> Result<Case> {
    Ok(Case {
        inputs,
        forward: Box::new(forward),
    })
}

fn binary(rng: &mut RngStream, f: fn(&mut Graph<f64>, Var, Var) -> Result<Var>) -> Result<Case> {
    let shape = [2, 3, 4, 5];
    case(alloc::vec![normal(rng, &shape), normal(rng, &shape)], move |g, v| f(g, v[0], v[1]))
}

fn unary(input: Tensor<f64>, f: fn(&mut Graph<f64>, Var) -> Var) -> Result<Case> {
    case(alloc::vec![input], move |g, v| Ok(f(g, v[0])))
}

fn activation(input: Tensor<f64>, kind: Activation) -> Result<Case> {
    case(alloc::vec![input], move |g, v| Ok(g.activation(v[0], kind)))
}

fn conv(rng: &mut RngStream) -> Result<Case> {
    let stride = 1 + rng.int_inclusive(0, 1) as usize;
    let pad = rng.int_inclusive(0, 1) as usize;
    let x = normal(rng, &[2, 3, 7, 6]);
    let w = normal(rng, &[4, 3, 3, 3]);
    let b = normal(rng, &[4]);
    case(alloc::vec![x, w, b], move |g, v| g.conv2d(v[0], v[1], Some(v[2]), stride, pad))
}

fn conv_transpose(rng: &mut RngStream) -> Result<Case> {
    let stride = 1 + rng.int_inclusive(0, 1) as usize;
    let pad = rng.int_inclusive(0, 1) as usize;
    let x = normal(rng, &[2, 3, 4, 3]);
    let w = normal(rng, &[3, 2, 4, 4]);
    let b = normal(rng, &[2]);
    case(alloc::vec![x, w, b], move |g, v| g.conv_transpose2d(v[0], v[1], Some(v[2]), stride, pad))
}

fn batchnorm(rng: &mut RngStream, mode: Mode) -> Result<Case> {
    let x = normal(rng, &[3, 2, 3, 4]).map(|v| 2.0 * v + 0.5);
    let gamma = normal(rng, &[2]);
    let beta = normal(rng, &[2]);
    let mean: Vec<f64> = (0..2).map(|_| rng.normal(0.0, 1.0)).collect();
    let var: Vec<f64> = (0..2).map(|_| 0.5 + rng.uniform()).collect();
    case(alloc::vec![x, gamma, beta], move |g, v| {
        let mut stats = RunningStats {
            mean: mean.clone(),
            var: var.clone(),
        };
        g.batchnorm2d(v[0], v[1], v[2], mode, &mut stats, BatchNormConfig::default())
    })
}

fn dropout(rng: &mut RngStream) -> Result<Case> {
    let seed = rng.next_u64();
    let rate = 0.2 + 0.6 * rng.uniform();
    case(alloc::vec![normal(rng, &[2, 3, 4, 4])], move |g, v| {
        g.dropout(v[0], rate, Mode::Train, &mut RngStream::new(seed))
    })
}

fn concat(rng: &mut RngStream) -> Result<Case> {
    let a = normal(rng, &[2, 2, 3, 3]);
    let b = normal(rng, &[2, 3, 3, 3]);
    case(alloc::vec![a, b], |g, v| g.concat_channels(v[0], v[1]))
}

fn bce(rng: &mut RngStream) -> Result<Case> {
    let target = f64::from(rng.int_inclusive(0, 1));
    case(alloc::vec![normal(rng, &[2, 1, 4, 4]).map(|v| 3.0 * v)], move |g, v| {
        Ok(g.bce_with_logits(v[0], target))
    })
}

fn recon(rng: &mut RngStream, kind: ReconKind) -> Result<Case> {
    let generated = normal(rng, &[2, 3, 4, 4]);
    // keep |target - generated| away from the kink of the L1 term
    let target = off_zero(rng, &[2, 3, 4, 4]);
    let target = Tensor::from_vec(
        target.shape(),
        target.data().iter().zip(generated.data()).map(|(t, g)| g + t).collect(),
    )?;
    case(alloc::vec![generated, target], move |g, v| recon_loss(g, v[0], v[1], kind))
}

fn mix(rng: &mut RngStream) -> Result<Case> {
    let alpha = rng.uniform();
    recon(rng, ReconKind::Mix(alpha))
}

fn gan_generator(rng: &mut RngStream) -> Result<Case> {
    case(alloc::vec![normal(rng, &[2, 1, 5, 5])], |g, v| Ok(gan_loss_generator(g, v[0])))
}

fn gan_discriminator(rng: &mut RngStream) -> Result<Case> {
    case(alloc::vec![normal(rng, &[2, 1, 5, 5]), normal(rng, &[2, 1, 5, 5])], |g, v| {
        Ok(gan_loss_discriminator(g, v[0], v[1]))
    })
}

/// Redraw `build` until no relu or abs input of the forward pass lies within
/// `KINK_MARGIN` of zero, where central differences straddle the kink.
fn away_from_kinks(rng: &mut RngStream, build: fn(&mut RngStream) -> Result<Case>) -> Result<Case> {
    for _ in 0..REDRAWS {
        let case = build(rng)?;
        let mut graph = Graph::new();
        let vars: Vec<Var> = case.inputs.iter().map(|t| graph.constant(t.clone())).collect();
        (case.forward)(&mut graph, &vars)?;
        if graph.kink_distance() >= KINK_MARGIN {
            return Ok(case);
        }
    }
    Err(Error::invalid("gradcheck", "no case clear of activation kinks"))
}

/// Network parameters moved off their initial values: conv weights and biases
/// scaled up from the small init, batchnorm affine terms jittered around 1 and 0.
fn spread_parameters(net: &crate::models::Network<f64>, rng: &mut RngStream) -> Vec<Tensor<f64>> {
    net.parameter_names()
        .iter()
        .zip(net.parameters())
        .map(|(name, p)| {
            let mut p = p.clone();
            let affine = name.ends_with("gamma") || name.ends_with("beta");
            for v in p.data_mut() {
                *v = if affine { *v + 0.5 * rng.normal(0.0, 1.0) } else { *v * 25.0 };
            }
            p
        })
        .collect()
}

/// Parameters are the checked inputs; dropout replays one seed on every evaluation.
fn unet_case(rng: &mut RngStream) -> Result<Case> {
    let mut init = rng.fork();
    let net = build_unet_generator::<f64>(2, 2, 2, 3, true, &mut init)?;
    let mut inputs = spread_parameters(&net, rng);
    inputs.push(normal(rng, &[2, 2, 8, 8]));
    let seed = rng.next_u64();
    case(inputs, move |g, v| {
        let mut net = net.clone();
        let (params, x) = v.split_at(v.len() - 1);
        let bound = crate::models::Bound::from_vars(params.to_vec());
        net.forward(g, &bound, x[0], &mut RngStream::new(seed))
    })
}

fn unet(rng: &mut RngStream) -> Result<Case> {
    away_from_kinks(rng, unet_case)
}

fn patchgan_case(rng: &mut RngStream) -> Result<Case> {
    let mut init = rng.fork();
    let net = build_patchgan::<f64>(2, PatchVariant::Patch16, 2, &mut init)?;
    let mut inputs = spread_parameters(&net, rng);
    inputs.push(normal(rng, &[2, 2, 10, 10]));
    case(inputs, move |g, v| {
        let mut net = net.clone();
        let (params, x) = v.split_at(v.len() - 1);
        let bound = crate::models::Bound::from_vars(params.to_vec());
        net.forward(g, &bound, x[0], &mut RngStream::new(0))
    })
}

fn patchgan(rng: &mut RngStream) -> Result<Case> {
    away_from_kinks(rng, patchgan_case)
}

/// Deliberately wrong backward rule (d/dx x^3 reported as 2x), a negative control.
fn corrupted(rng: &mut RngStream) -> Result<Case> {
    unary(normal(rng, &[3, 4]), |g, x| g.custom_elementwise(x, |v| v * v * v, |v| 2.0 * v))
}

macro_rules! op {
    ($name:literal, $build:expr) => {
        GradOp {
            name: $name,
            build: $build,
        }
    };
}

static OPS: &[GradOp] = &[
    op!("add", |r| binary(r, |g, a, b| g.add(a, b))),
    op!("sub", |r| binary(r, |g, a, b| g.sub(a, b))),
    op!("mul", |r| binary(r, |g, a, b| g.mul(a, b))),
    op!("scale", |r| {
        let s = r.normal(0.0, 2.0);
        case(alloc::vec![normal(r, &[3, 4])], move |g, v| Ok(g.scale(v[0], s)))
    }),
    op!("abs", |r| unary(off_zero(r, &[3, 5]), |g, x| g.abs(x))),
    op!("square", |r| unary(normal(r, &[3, 5]), |g, x| g.square(x))),
    op!("sum", |r| unary(normal(r, &[3, 5]), |g, x| g.sum(x))),
    op!("mean", |r| unary(normal(r, &[3, 5]), |g, x| g.mean(x))),
    op!("relu", |r| activation(off_zero(r, &[2, 3, 3, 3]), Activation::Relu)),
    op!("leaky_relu", |r| activation(off_zero(r, &[2, 3, 3, 3]), Activation::LeakyRelu(0.2))),
    op!("tanh", |r| activation(normal(r, &[2, 3, 3, 3]), Activation::Tanh)),
    op!("sigmoid", |r| activation(normal(r, &[2, 3, 3, 3]), Activation::Sigmoid)),
    op!("conv2d", conv),
    op!("conv_transpose2d", conv_transpose),
    op!("batchnorm_train", |r| batchnorm(r, Mode::Train)),
    op!("batchnorm_eval", |r| batchnorm(r, Mode::Eval)),
    op!("dropout", dropout),
    op!("concat", concat),
    op!("bce_with_logits", bce),
    op!("recon_l1", |r| recon(r, ReconKind::L1)),
    op!("recon_l2", |r| recon(r, ReconKind::L2)),
    op!("recon_mix", mix),
    op!("gan_generator", gan_generator),
    op!("gan_discriminator", gan_discriminator),
    op!("unet", unet),
    op!("patchgan", patchgan),
];

static FIXTURES: &[GradOp] = &[op!("corrupted", corrupted)];

/// Every certified op, in a fixed order.
pub fn ops() -> &'static [GradOp] {
    OPS
}

/// A certified op or a negative-control fixture by name.
pub fn find(name: &str) -> Result<&'static GradOp> {
    OPS.iter()
        .chain(FIXTURES)
        .find(|op| op.name == name)
        .ok_or_else(|| Error::invalid("gradcheck", format!("unknown op {name:?}")))
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn check_case(case: &Case, rng: &mut RngStream) -> Result<f64> {
    let mut graph = Graph::new();
    let vars: Vec<Var> = case.inputs.iter().map(|t| graph.param(t.clone())).collect();
    let out = (case.forward)(&mut graph, &vars)?;
    let weights = normal(rng, graph.value(out).shape());
    let reduce = |g: &mut Graph<f64>, out: Var| -> Result<Var> {
        let w = g.constant(weights.clone());
        let p = g.mul(out, w)?;
        Ok(g.sum(p))
    };
    let loss = reduce(&mut graph, out)?;
    let grads = graph.backward(loss)?;
    let eval = |inputs: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
        let out = (case.forward)(&mut g, &vars)?;
        let loss = reduce(&mut g, out)?;
        Ok(g.value(loss).item())
    };
    let mut worst: f64 = 0.0;
    let mut probe = case.inputs.clone();
    for (i, input) in case.inputs.iter().enumerate() {
        let analytic = grads.get_or_zeros(&graph, vars[i]);
        let n = input.numel();
        let coords: Vec<usize> = if n <= COORDS {
            (0..n).collect()
        } else {
            (0..COORDS).map(|_| rng.int_inclusive(0, n as u32 - 1) as usize).collect()
        };
        for j in coords {
            let x = input.data()[j];
            probe[i].data_mut()[j] = x + STEP;
            let plus = eval(&probe)?;
            probe[i].data_mut()[j] = x - STEP;
            let minus = eval(&probe)?;
            probe[i].data_mut()[j] = x;
            let numeric = (plus - minus) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic.data()[j], numeric));
        }
    }
    Ok(worst)
}

impl GradOp {
    /// Largest relative error over `trials` random cases drawn from `seed`.
    pub fn check(&self, trials: usize, seed: u64) -> Result<OpReport> {
        let mut rng = RngStream::new(seed);
        let mut max_rel_error: f64 = 0.0;
        for _ in 0..trials {
            let case = (self.build)(&mut rng)?;
            max_rel_error = max_rel_error.max(check_case(&case, &mut rng)?);
        }
        Ok(OpReport {
            name: self.name,
            trials,
            max_rel_error,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_op_passes() {
        for op in ops() {
            let report = op.check(10, 1).unwrap();
            assert!(report.passed(), "{}: {:e}", op.name, report.max_rel_error);
        }
    }

    #[test]
    fn corrupted_rule_is_caught() {
        let report = find("corrupted").unwrap().check(3, 1).unwrap();
        assert!(!report.passed());
        assert!(ops().iter().all(|op| op.name != "corrupted"));
    }

    #[test]
    fn more_trials_never_lower_the_max() {
        for name in ["conv2d", "batchnorm_train", "unet"] {
            let op = find(name).unwrap();
            let one = op.check(1, 5).unwrap().max_rel_error;
            let ten = op.check(10, 5).unwrap().max_rel_error;
            assert!(ten >= one);
        }
    }

    #[test]
    fn network_ops_pass_across_seeds() {
        for seed in 0..6 {
            for name in ["unet", "patchgan"] {
                let report = find(name).unwrap().check(10, seed).unwrap();
                assert!(report.passed(), "{name} seed {seed}: {:e}", report.max_rel_error);
            }
        }
    }

    #[test]
    fn cases_clear_kinks() {
        let mut rng = RngStream::new(2);
        let case = unet(&mut rng).unwrap();
        let mut graph = Graph::new();
        let vars: Vec<Var> = case.inputs.iter().map(|t| graph.constant(t.clone())).collect();
        (case.forward)(&mut graph, &vars).unwrap();
        assert!(graph.kink_distance() >= KINK_MARGIN);
    }

    #[test]
    fn unknown_op_rejected() {
        assert!(find("softmax").is_err());
    }
}
