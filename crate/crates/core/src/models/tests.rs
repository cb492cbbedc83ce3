use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::autograd::{Graph, Mode};
use crate::rng::RngStream;
use crate::tensor::Tensor;

fn rand_image(rng: &mut RngStream, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect()).unwrap()
}

#[test]
fn depth5_unet_on_32px_reaches_1x1_bottleneck() {
    let spec = unet_spec(3, 3, 8, 5, true).unwrap();
    let extents = spec.block_extents(32, 32).unwrap();
    assert_eq!(extents[4], (1, 1));
    assert_eq!(*extents.last().unwrap(), (32, 32));

    let mut rng = RngStream::new(0);
    let mut net = Network::<f64>::new(spec, &mut rng).unwrap();
    let x = rand_image(&mut rng, &[2, 3, 32, 32]);
    let y = net.infer(&x, &mut rng).unwrap();
    assert_eq!(y.shape(), &[2, 3, 32, 32]);
    assert!(y.data().iter().all(|v| v.abs() < 1.0));
}

#[test]
fn removing_skips_halves_decoder_inputs() {
    let with = unet_spec(3, 3, 8, 5, true).unwrap();
    let without = unet_spec(3, 3, 8, 5, false).unwrap();
    let dec = |s: &ModelSpec| -> Vec<usize> {
        s.blocks
            .iter()
            .filter(|b| b.role == BlockRole::Decoder)
            .map(|b| b.in_channels)
            .collect()
    };
    let (a, b) = (dec(&with), dec(&without));
    assert_eq!(a[0], b[0], "innermost decoder block has no skip input");
    for i in 1..a.len() {
        assert_eq!(a[i], 2 * b[i]);
    }
}

#[test]
fn skip_toggle_preserves_output_shape() {
    let mut rng = RngStream::new(1);
    let x = rand_image(&mut rng, &[1, 3, 16, 16]);
    for skip in [true, false] {
        let mut g = build_unet_generator::<f64>(3, 2, 4, 4, skip, &mut rng).unwrap();
        assert_eq!(g.infer(&x, &mut rng).unwrap().shape(), &[1, 2, 16, 16]);
    }
}

#[test]
fn unet_channel_progression_is_capped() {
    let spec = unet_spec(3, 3, 64, 8, true).unwrap();
    let enc: Vec<usize> = spec
        .blocks
        .iter()
        .filter(|b| b.role == BlockRole::Encoder)
        .map(|b| b.out_channels)
        .collect();
    assert_eq!(enc, vec![64, 128, 256, 512, 512, 512, 512, 512]);
    let drop: Vec<f64> = spec
        .blocks
        .iter()
        .filter(|b| b.role == BlockRole::Decoder)
        .map(|b| b.dropout)
        .collect();
    assert_eq!(drop, vec![0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn generator_rejects_indivisible_extent_and_wrong_channels() {
    let mut rng = RngStream::new(2);
    let mut g = build_unet_generator::<f64>(3, 3, 4, 3, true, &mut rng).unwrap();
    assert!(g.infer(&Tensor::zeros(&[1, 3, 12, 12]), &mut rng).is_err());
    assert!(g.infer(&Tensor::zeros(&[1, 1, 16, 16]), &mut rng).is_err());
}

#[test]
fn zero_parameters_give_zero_output() {
    let spec = unet_spec(3, 3, 4, 3, true).unwrap();
    let mut g = Network::<f64>::zeroed(spec).unwrap();
    let mut rng = RngStream::new(3);
    let y = g.infer(&rand_image(&mut rng, &[2, 3, 8, 8]), &mut rng).unwrap();
    assert!(y.data().iter().all(|&v| v == 0.0));
}

#[test]
fn forward_is_deterministic_for_a_seed() {
    let mut rng = RngStream::new(4);
    let mut g = build_unet_generator::<f64>(3, 3, 4, 3, true, &mut rng).unwrap();
    let x = rand_image(&mut rng, &[2, 3, 8, 8]);
    let mut a = g.clone();
    let ya = a.infer(&x, &mut RngStream::new(9)).unwrap();
    let yb = g.infer(&x, &mut RngStream::new(9)).unwrap();
    assert_eq!(ya, yb);
    // dropout stays active at inference, so another seed gives another sample
    g.set_mode(Mode::Eval);
    let yc = g.infer(&x, &mut RngStream::new(10)).unwrap();
    let yd = g.infer(&x, &mut RngStream::new(11)).unwrap();
    assert_ne!(yc, yd);
}

#[test]
fn discriminator_takes_condition_and_candidate() {
    let mut rng = RngStream::new(5);
    let mut d = build_patchgan::<f64>(6, PatchVariant::Patch70, 4, &mut rng).unwrap();
    let cond = rand_image(&mut rng, &[2, 3, 32, 32]);
    let cand = rand_image(&mut rng, &[2, 3, 32, 32]);
    let mut g = Graph::new();
    let b = d.bind(&mut g);
    let (c, x) = (g.constant(cond), g.constant(cand));
    let pair = g.concat_channels(c, x).unwrap();
    let out = d.forward(&mut g, &b, pair, &mut rng).unwrap();
    assert_eq!(g.value(out).shape(), &[2, 1, 2, 2]);
    assert!(d.forward(&mut g, &b, x, &mut rng).is_err());
}

#[test]
fn patch_receptive_fields() {
    for v in PatchVariant::ALL {
        assert_eq!(receptive_field(&patchgan_spec(6, v, 8)).unwrap(), v.nominal());
    }
}

/// Receptive field by the recurrence, computed from (kernel, stride) pairs alone.
fn recurrence(layers: &[(usize, usize)]) -> usize {
    layers.iter().rev().fold(1, |r, &(k, s)| s * r + (k - s))
}

#[test]
fn receptive_field_by_recurrence() {
    let conv = |stride| BlockSpec {
        role: BlockRole::Stage,
        conv: ConvKind::Conv,
        in_channels: 1,
        out_channels: 1,
        kernel: 4,
        stride,
        padding: 1,
        norm: false,
        activation: Activation::Identity,
        dropout: 0.0,
    };
    let mut spec = patchgan_spec(1, PatchVariant::Patch16, 1);
    spec.blocks = vec![conv(2)];
    assert_eq!(receptive_field(&spec).unwrap(), 4);
    spec.blocks = vec![conv(2), conv(2)];
    assert_eq!(receptive_field(&spec).unwrap(), 10);
    for v in PatchVariant::ALL {
        let s = patchgan_spec(3, v, 4);
        let layers: Vec<(usize, usize)> = s.blocks.iter().map(|b| (b.kernel, b.stride)).collect();
        assert_eq!(recurrence(&layers), v.nominal());
    }
}

#[test]
fn receptive_field_rejects_transposed_convs() {
    assert!(receptive_field(&unet_spec(3, 3, 4, 3, false).unwrap()).is_err());
}

#[test]
fn unknown_variant_rejected() {
    assert!("patch32".parse::<PatchVariant>().is_err());
    assert_eq!("patch70".parse::<PatchVariant>().unwrap(), PatchVariant::Patch70);
}

#[test]
fn patch70_on_256px_emits_a_logit_map() {
    let spec = patchgan_spec(6, PatchVariant::Patch70, 2);
    let last = *spec.block_extents(256, 256).unwrap().last().unwrap();
    assert_eq!(last, (30, 30));
    let mut rng = RngStream::new(6);
    let mut d = Network::<f32>::new(spec, &mut rng).unwrap();
    let out = d.infer(&Tensor::zeros(&[1, 6, 256, 256]), &mut rng).unwrap();
    assert_eq!(out.shape(), &[1, 1, 30, 30]);
}

#[test]
fn patch286_needs_larger_inputs() {
    let spec = patchgan_spec(6, PatchVariant::Patch286, 2);
    assert!(spec.block_extents(32, 32).is_err());
    assert!(spec.block_extents(256, 256).is_ok());
}

#[test]
fn parameter_counts() {
    // weights + (bias | gamma, beta), standard 64-wide discriminators on 6 channels
    let table = [
        (PatchVariant::Patch16, 6 * 64 * 16 + 64 + 64 * 128 * 16 + 256 + 128 * 16 + 1),
        (PatchVariant::Patch70, 2_768_705),
        (
            PatchVariant::Patch286,
            6 * 64 * 16 + 64
                + 64 * 128 * 16 + 256
                + 128 * 256 * 16 + 512
                + 256 * 512 * 16 + 1024
                + 2 * (512 * 512 * 16 + 1024)
                + 512 * 16 + 1,
        ),
    ];
    for (v, count) in table {
        let spec = patchgan_spec(6, v, 64);
        assert_eq!(spec.parameter_count(), count, "{v}");
        let net = Network::<f32>::zeroed(spec).unwrap();
        assert_eq!(net.parameter_count(), count);
    }
    // depth-5 U-Net, base 16, 3 -> 3 channels
    let enc = 3 * 16 * 16 + 16 + 16 * 32 * 16 + 64 + 32 * 64 * 16 + 128 + 64 * 128 * 16 + 256 + 128 * 128 * 16 + 128;
    let dec = 128 * 128 * 16 + 256
        + 256 * 64 * 16 + 128
        + 128 * 32 * 16 + 64
        + 64 * 16 * 16 + 32
        + 32 * 16 * 16 + 32;
    let out = 16 * 3 * 9 + 3;
    assert_eq!(unet_spec(3, 3, 16, 5, true).unwrap().parameter_count(), enc + dec + out);
}

#[test]
fn parameter_names_are_unique_and_stable() {
    let spec = unet_spec(3, 3, 4, 4, true).unwrap();
    let a = Network::<f32>::zeroed(spec.clone()).unwrap();
    let b = Network::<f32>::new(spec, &mut RngStream::new(1)).unwrap();
    assert_eq!(a.parameter_names(), b.parameter_names());
    let mut names: Vec<_> = a.named_tensors().into_iter().map(|(n, _)| n).collect();
    let total = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), total);
    assert!(names.iter().any(|n| n == "decoder.0.running_var"));
}

#[test]
fn named_tensors_round_trip() {
    let mut rng = RngStream::new(7);
    let mut net = build_patchgan::<f32>(6, PatchVariant::Patch16, 4, &mut rng).unwrap();
    net.infer(&Tensor::full(&[2, 6, 16, 16], 0.5), &mut rng).unwrap();
    let back = Network::from_named_tensors(net.spec().clone(), net.named_tensors()).unwrap();
    assert_eq!(back, net);
    let other = patchgan_spec(6, PatchVariant::Patch70, 4);
    assert!(matches!(
        Network::from_named_tensors(other, net.named_tensors()),
        Err(Error::SpecMismatch(_))
    ));
}

/// Window of input rows/cols covered by output index `o` of a conv stack.
fn window(layers: &[(usize, usize, usize)], o: usize) -> (isize, isize) {
    // walk back from the output: [lo, hi] in each earlier layer's coordinates
    let (mut lo, mut hi) = (o as isize, o as isize);
    for &(k, s, p) in layers.iter().rev() {
        lo = lo * s as isize - p as isize;
        hi = hi * s as isize - p as isize + k as isize - 1;
    }
    (lo, hi)
}

#[test]
fn receptive_field_matches_perturbation_probe() {
    for v in [PatchVariant::Patch16, PatchVariant::Patch70] {
        let mut spec = patchgan_spec(1, v, 2);
        for b in spec.blocks.iter_mut() {
            b.norm = false;
        }
        let mut rng = RngStream::new(8);
        let mut d = Network::<f64>::new(spec.clone(), &mut rng).unwrap();
        let size = 40;
        let base = rand_image(&mut rng, &[1, 1, size, size]);
        let out0 = d.infer(&base, &mut rng).unwrap();
        let [_, _, oh, ow] = out0.dims4("probe").unwrap();
        let layers: Vec<_> = spec.blocks.iter().map(|b| (b.kernel, b.stride, b.padding)).collect();
        let (lo, hi) = window(&layers, 0);
        assert_eq!((hi - lo + 1) as usize, v.nominal());
        for &(py, px) in &[(0usize, 0usize), (size / 2, size / 3), (size - 1, 7)] {
            let mut probe = base.clone();
            probe.data_mut()[py * size + px] += 0.5;
            let out = d.infer(&probe, &mut rng).unwrap();
            for y in 0..oh {
                for x in 0..ow {
                    let changed = out.data()[y * ow + x] != out0.data()[y * ow + x];
                    let (ylo, yhi) = window(&layers, y);
                    let (xlo, xhi) = window(&layers, x);
                    let covered = (ylo..=yhi).contains(&(py as isize)) && (xlo..=xhi).contains(&(px as isize));
                    assert_eq!(changed, covered, "{v} logit ({y},{x}) pixel ({py},{px})");
                }
            }
        }
    }
}

#[test]
fn spec_text_round_trip() {
    let mut specs = vec![unet_spec(3, 3, 8, 5, true).unwrap(), unet_spec(1, 2, 4, 3, false).unwrap()];
    for v in PatchVariant::ALL {
        specs.push(patchgan_spec(6, v, 16));
    }
    specs[0].batchnorm.eps = 1e-3;
    specs[0].init_std = 0.05;
    for spec in specs {
        assert_eq!(ModelSpec::from_text(&spec.to_text()).unwrap(), spec);
    }
}

#[test]
fn spec_text_rejects_damage() {
    let text = unet_spec(3, 3, 8, 3, true).unwrap().to_text();
    assert!(ModelSpec::from_text(&text.replace("kind = generator", "kind = critic")).is_err());
    assert!(ModelSpec::from_text(&text.replace("in_channels = 3", "in_channels = 4")).is_err());
    assert!(ModelSpec::from_text(&format!("{text}colour = red\n")).is_err());
    let truncated: alloc::string::String = text.lines().take(12).flat_map(|l| [l, "\n"]).collect();
    assert!(ModelSpec::from_text(&truncated).is_err());
}
