use alloc::vec::Vec;
use core::hash::{Hash, Hasher};
use std::collections::hash_map::DefaultHasher;

use proptest::prelude::*;

use super::*;
use crate::autograd::{Graph, Var};
use crate::data::{synthetic_paired, synthetic_unpaired, Batch, Dataset, Domain, ImageSet, Split};
use crate::error::{Error, Result};
use crate::models::{build_patchgan, build_unet_generator, Network, PatchVariant};
use crate::rng::RngStream;
use crate::tensor::Tensor;

fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = RngStream::new(seed);
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.normal(0.0, 2.0)).collect()).unwrap()
}

fn bce_ref(x: f64, t: f64) -> f64 {
    let p = 1.0 / (1.0 + (-x).exp());
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

fn eval(graph: &Graph<f64>, v: Var) -> f64 {
    graph.value(v).item()
}

fn identity() -> impl FnMut(&mut Graph<f64>, Var) -> Result<Var> {
    |_: &mut Graph<f64>, v: Var| Ok(v)
}

#[test]
fn generator_gan_loss_values() {
    let mut g = Graph::new();
    let zeros = g.constant(Tensor::zeros(&[2, 1, 3, 3]));
    let l = gan_loss_generator(&mut g, zeros);
    assert!((eval(&g, l) - core::f64::consts::LN_2).abs() < 1e-15);
    let confident = g.constant(Tensor::full(&[1, 1, 2, 2], 20.0));
    let l = gan_loss_generator(&mut g, confident);
    assert!(eval(&g, l) < 1e-8);
    let logits = random(&[2, 1, 4, 4], 1);
    let expected = logits.data().iter().map(|&x| bce_ref(x, 1.0)).sum::<f64>() / 32.0;
    let v = g.constant(logits);
    let l = gan_loss_generator(&mut g, v);
    assert!((eval(&g, l) - expected).abs() < 1e-12);
}

#[test]
fn discriminator_gan_loss_values() {
    let mut g = Graph::new();
    let zeros = g.constant(Tensor::zeros(&[1, 1, 3, 3]));
    let l = gan_loss_discriminator(&mut g, zeros, zeros);
    assert!((eval(&g, l) - core::f64::consts::LN_2).abs() < 1e-15);
    let real = g.constant(Tensor::full(&[1, 1, 3, 3], 20.0));
    let fake = g.constant(Tensor::full(&[1, 1, 3, 3], -20.0));
    let l = gan_loss_discriminator(&mut g, real, fake);
    assert!(eval(&g, l) < 1e-8);
}

#[test]
fn discriminator_loss_is_half_the_two_term_sum() {
    let mut g = Graph::new();
    let real = g.constant(random(&[2, 1, 5, 5], 2));
    let fake = g.constant(random(&[2, 1, 5, 5], 3));
    let halved = gan_loss_discriminator(&mut g, real, fake);
    let r = g.bce_with_logits(real, 1.0);
    let f = g.bce_with_logits(fake, 0.0);
    let full = eval(&g, r) + eval(&g, f);
    assert_eq!(eval(&g, halved), full * 0.5);
    let oracle = (real_oracle(g.value(real)) + fake_oracle(g.value(fake))) / 2.0;
    assert!((eval(&g, halved) - oracle).abs() < 1e-12);
}

fn real_oracle(t: &Tensor<f64>) -> f64 {
    t.data().iter().map(|&x| bce_ref(x, 1.0)).sum::<f64>() / t.numel() as f64
}

fn fake_oracle(t: &Tensor<f64>) -> f64 {
    t.data().iter().map(|&x| bce_ref(x, 0.0)).sum::<f64>() / t.numel() as f64
}

fn recon(generated: Tensor<f64>, target: Tensor<f64>, kind: ReconKind) -> Result<f64> {
    let mut g = Graph::new();
    let a = g.constant(generated);
    let b = g.constant(target);
    let l = recon_loss(&mut g, a, b, kind)?;
    Ok(eval(&g, l))
}

#[test]
fn recon_identity_and_constant_cases() {
    let y = random(&[2, 3, 4, 4], 4);
    for kind in [ReconKind::L1, ReconKind::L2, ReconKind::Mix(0.3)] {
        assert_eq!(recon(y.clone(), y.clone(), kind).unwrap(), 0.0);
    }
    let shifted = y.map(|v| v + 2.0);
    assert!((recon(y.clone(), shifted.clone(), ReconKind::L1).unwrap() - 2.0).abs() < 1e-12);
    assert!((recon(y.clone(), shifted.clone(), ReconKind::L2).unwrap() - 4.0).abs() < 1e-12);
    assert!((recon(y, shifted, ReconKind::Mix(0.5)).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn recon_matches_elementwise_oracle() {
    let (a, b) = (random(&[1, 2, 3, 3], 5), random(&[1, 2, 3, 3], 6));
    let n = a.numel() as f64;
    let l1: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (y - x).abs()).sum::<f64>() / n;
    let l2: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (y - x) * (y - x)).sum::<f64>() / n;
    assert!((recon(a.clone(), b.clone(), ReconKind::L1).unwrap() - l1).abs() < 1e-12);
    assert!((recon(a, b, ReconKind::L2).unwrap() - l2).abs() < 1e-12);
}

#[test]
fn recon_mix_endpoints() {
    let (a, b) = (random(&[1, 1, 4, 4], 7), random(&[1, 1, 4, 4], 8));
    let l1 = recon(a.clone(), b.clone(), ReconKind::L1).unwrap();
    let l2 = recon(a.clone(), b.clone(), ReconKind::L2).unwrap();
    assert_eq!(recon(a.clone(), b.clone(), ReconKind::Mix(1.0)).unwrap(), l1);
    assert_eq!(recon(a, b, ReconKind::Mix(0.0)).unwrap(), l2);
}

#[test]
fn recon_rejects_shape_mismatch() {
    let r = recon(random(&[1, 1, 4, 4], 1), random(&[1, 1, 4, 2], 1), ReconKind::L1);
    assert!(matches!(r, Err(Error::Shape { .. })));
}

#[test]
fn recon_kind_parsing() {
    assert_eq!("l1".parse::<ReconKind>().unwrap(), ReconKind::L1);
    assert_eq!("mix".parse::<ReconKind>().unwrap(), ReconKind::Mix(0.5));
    assert_eq!("mix:0.25".parse::<ReconKind>().unwrap(), ReconKind::Mix(0.25));
    assert!("mix:1.5".parse::<ReconKind>().is_err());
    assert!("l3".parse::<ReconKind>().is_err());
}

proptest! {
    #[test]
    fn mix_is_exact_convex_combination(alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let (a, b) = (random(&[1, 2, 3, 3], seed), random(&[1, 2, 3, 3], seed ^ 1));
        let l1 = recon(a.clone(), b.clone(), ReconKind::L1).unwrap();
        let l2 = recon(a.clone(), b.clone(), ReconKind::L2).unwrap();
        prop_assert_eq!(recon(a, b, ReconKind::Mix(alpha)).unwrap(), alpha * l1 + (1.0 - alpha) * l2);
    }
}

struct Pair {
    gen: Network<f64>,
    disc: Network<f64>,
}

fn tiny_pair(seed: u64) -> Pair {
    let mut rng = RngStream::new(seed);
    Pair {
        gen: build_unet_generator(3, 3, 4, 3, true, &mut rng).unwrap(),
        disc: build_patchgan(6, PatchVariant::Patch16, 4, &mut rng).unwrap(),
    }
}

fn run_paired(pair: &mut Pair, x: &Tensor<f64>, y: &Tensor<f64>, variant: LossVariant, seed: u64) -> (Graph<f64>, PairedLosses) {
    let mut g = Graph::new();
    let gb = pair.gen.bind(&mut g);
    let db = pair.disc.bind(&mut g);
    let xv = g.constant(x.clone());
    let yv = g.constant(y.clone());
    let mut rng = RngStream::new(seed);
    let losses = paired_objective(
        &mut g,
        &mut Bonded::new(&mut pair.gen, &gb),
        &mut Bonded::new(&mut pair.disc, &db),
        xv,
        yv,
        variant,
        &mut rng,
    )
    .unwrap();
    (g, losses)
}

#[test]
fn paired_objective_decomposes() {
    let x = random(&[2, 3, 8, 8], 10).map(f64::tanh);
    let y = random(&[2, 3, 8, 8], 11).map(f64::tanh);
    let mut pair = tiny_pair(1);
    let l1 = LossVariant {
        kind: ReconKind::L1,
        lambda: 100.0,
    };
    let (g, l) = run_paired(&mut pair, &x, &y, l1, 3);
    let total = eval(&g, l.gan) + 100.0 * eval(&g, l.recon);
    assert!((eval(&g, l.gen_total) - total).abs() < 1e-6);

    let (g, l) = run_paired(&mut pair, &x, &y, LossVariant { lambda: 0.0, ..l1 }, 3);
    assert_eq!(eval(&g, l.gen_total), eval(&g, l.gan));
}

#[test]
fn paired_objective_with_perfect_generator() {
    let x = random(&[2, 3, 8, 8], 12).map(f64::tanh);
    let mut pair = tiny_pair(2);
    let variant = LossVariant {
        kind: ReconKind::L1,
        lambda: 100.0,
    };
    let (g, l) = run_paired(&mut pair.clone(), &x, &x, variant, 5);
    let y = g.value(l.fake).clone();
    let (g, l) = run_paired(&mut pair, &x, &y, variant, 5);
    assert_eq!(eval(&g, l.recon), 0.0);
    assert_eq!(eval(&g, l.gen_total), eval(&g, l.gan));
}

impl Clone for Pair {
    fn clone(&self) -> Self {
        Pair {
            gen: self.gen.clone(),
            disc: self.disc.clone(),
        }
    }
}

#[test]
fn paired_discriminator_sees_detached_fake() {
    let x = random(&[1, 3, 8, 8], 13).map(f64::tanh);
    let y = random(&[1, 3, 8, 8], 14).map(f64::tanh);
    let mut pair = tiny_pair(3);
    let mut g = Graph::new();
    let gb = pair.gen.bind(&mut g);
    let db = pair.disc.bind(&mut g);
    let (xv, yv) = (g.constant(x), g.constant(y));
    let mut rng = RngStream::new(0);
    let l = paired_objective(
        &mut g,
        &mut Bonded::new(&mut pair.gen, &gb),
        &mut Bonded::new(&mut pair.disc, &db),
        xv,
        yv,
        LossVariant {
            kind: ReconKind::L2,
            lambda: 1.0,
        },
        &mut rng,
    )
    .unwrap();
    let grads = g.backward(l.disc).unwrap();
    assert!(gb.vars().iter().all(|&v| grads.get(v).is_none_or(|t| t.data().iter().all(|&x| x == 0.0))));
    assert!(db.vars().iter().any(|&v| grads.get(v).is_some()));
}

#[test]
fn cycle_loss_identities() {
    let a = random(&[2, 3, 4, 4], 20);
    let b = random(&[2, 3, 4, 4], 21);
    let mut g = Graph::new();
    let (av, bv) = (g.constant(a.clone()), g.constant(b.clone()));
    let mut rng = RngStream::new(0);
    let l = cycle_loss(&mut g, &mut identity(), &mut identity(), av, bv, ReconKind::L1, &mut rng).unwrap();
    assert_eq!(eval(&g, l), 0.0);

    // both negate, but G_B adds 1 on its second call (rec_a): only the A cycle is off
    let mut neg = |g: &mut Graph<f64>, v: Var| Ok(g.scale(v, -1.0));
    let mut calls = 0;
    let mut neg_then_shift = |g: &mut Graph<f64>, v: Var| {
        calls += 1;
        let n = g.scale(v, -1.0);
        if calls == 1 {
            Ok(n)
        } else {
            let one = g.constant(Tensor::full(g.value(v).shape(), 1.0));
            g.add(n, one)
        }
    };
    let l = cycle_loss(&mut g, &mut neg, &mut neg_then_shift, av, bv, ReconKind::L1, &mut rng).unwrap();
    assert!((eval(&g, l) - 1.0).abs() < 1e-12);
}

#[test]
fn cycle_loss_is_sum_of_recon_terms() {
    let a = random(&[1, 3, 8, 8], 22).map(f64::tanh);
    let b = random(&[1, 3, 8, 8], 23).map(f64::tanh);
    let mut rng = RngStream::new(4);
    let mut ga = build_unet_generator::<f64>(3, 3, 4, 3, true, &mut rng).unwrap();
    let mut gb = build_unet_generator::<f64>(3, 3, 4, 3, true, &mut rng).unwrap();
    ga.set_mode(crate::autograd::Mode::Eval);
    gb.set_mode(crate::autograd::Mode::Eval);
    let mut spec_a = ga.spec().clone();
    spec_a.dropout_at_inference = false;
    let mut spec_b = gb.spec().clone();
    spec_b.dropout_at_inference = false;
    let mut ga = Network::from_named_tensors(spec_a, ga.named_tensors()).unwrap();
    let mut gb = Network::from_named_tensors(spec_b, gb.named_tensors()).unwrap();
    ga.set_mode(crate::autograd::Mode::Eval);
    gb.set_mode(crate::autograd::Mode::Eval);

    let mut g = Graph::new();
    let (ba, bb) = (ga.bind(&mut g), gb.bind(&mut g));
    let (av, bv) = (g.constant(a.clone()), g.constant(b.clone()));
    let l = cycle_loss(
        &mut g,
        &mut Bonded::new(&mut ga, &ba),
        &mut Bonded::new(&mut gb, &bb),
        av,
        bv,
        ReconKind::Mix(0.5),
        &mut rng,
    )
    .unwrap();

    let rec_a = gb.infer(&ga.infer(&a, &mut rng).unwrap(), &mut rng).unwrap();
    let rec_b = ga.infer(&gb.infer(&b, &mut rng).unwrap(), &mut rng).unwrap();
    let forward = recon(rec_a, a, ReconKind::Mix(0.5)).unwrap();
    let backward = recon(rec_b, b, ReconKind::Mix(0.5)).unwrap();
    assert_eq!(eval(&g, l), forward + backward);
}

#[test]
fn unpaired_objective_decomposes() {
    let a = random(&[2, 3, 8, 8], 30).map(f64::tanh);
    let b = random(&[2, 3, 8, 8], 31).map(f64::tanh);
    let mut rng = RngStream::new(6);
    let mut da = build_patchgan::<f64>(3, PatchVariant::Patch16, 4, &mut rng).unwrap();
    let mut db = build_patchgan::<f64>(3, PatchVariant::Patch16, 4, &mut rng).unwrap();
    let mut g = Graph::new();
    let (bda, bdb) = (da.bind(&mut g), db.bind(&mut g));
    let (av, bv) = (g.constant(a), g.constant(b));
    let variant = LossVariant {
        kind: ReconKind::L1,
        lambda: 10.0,
    };
    let mut nets = CycleNets {
        gen_a: &mut identity(),
        gen_b: &mut identity(),
        disc_a: &mut Bonded::new(&mut da, &bda),
        disc_b: &mut Bonded::new(&mut db, &bdb),
    };
    let l = unpaired_objective(&mut g, &mut nets, av, bv, variant, false, &mut rng).unwrap();
    assert_eq!(eval(&g, l.cycle), 0.0);
    let sum = eval(&g, l.gan_ab) + eval(&g, l.gan_ba) + 10.0 * eval(&g, l.cycle);
    assert!((eval(&g, l.gen_total) - sum).abs() < 1e-6);

    let mut shift = |g: &mut Graph<f64>, v: Var| Ok(g.scale(v, 0.5));
    let mut nets = CycleNets {
        gen_a: &mut shift,
        gen_b: &mut identity(),
        disc_a: &mut Bonded::new(&mut da, &bda),
        disc_b: &mut Bonded::new(&mut db, &bdb),
    };
    let l = unpaired_objective(&mut g, &mut nets, av, bv, LossVariant { lambda: 0.0, ..variant }, false, &mut rng).unwrap();
    assert!(eval(&g, l.cycle) > 0.0);
    assert_eq!(eval(&g, l.gen_total), eval(&g, l.gan_ab) + eval(&g, l.gan_ba));
}

#[test]
fn conditional_unpaired_discriminators_take_both_images() {
    let a = random(&[1, 3, 8, 8], 32).map(f64::tanh);
    let b = random(&[1, 3, 8, 8], 33).map(f64::tanh);
    let mut rng = RngStream::new(7);
    let mut da = build_patchgan::<f64>(6, PatchVariant::Patch16, 4, &mut rng).unwrap();
    let mut db = build_patchgan::<f64>(6, PatchVariant::Patch16, 4, &mut rng).unwrap();
    let mut g = Graph::new();
    let (bda, bdb) = (da.bind(&mut g), db.bind(&mut g));
    let (av, bv) = (g.constant(a), g.constant(b));
    let variant = LossVariant {
        kind: ReconKind::L1,
        lambda: 10.0,
    };
    let mut nets = CycleNets {
        gen_a: &mut identity(),
        gen_b: &mut identity(),
        disc_a: &mut Bonded::new(&mut da, &bda),
        disc_b: &mut Bonded::new(&mut db, &bdb),
    };
    assert!(unpaired_objective(&mut g, &mut nets, av, bv, variant, false, &mut rng).is_err());
    assert!(unpaired_objective(&mut g, &mut nets, av, bv, variant, true, &mut rng).is_ok());
}

fn tiny_config(task: Task) -> TrainConfig {
    let mut c = TrainConfig::new(task);
    c.image_size = 16;
    c.gen_depth = 4;
    c.gen_width = 4;
    c.disc_width = 4;
    c.patch = PatchVariant::Patch16;
    c.batch_size = 2;
    c.jitter_upsize = 18;
    c.seed = 99;
    c
}

fn paired_data(n: usize, seed: u64) -> Dataset<f64> {
    let pairs = synthetic_paired(n, 16, seed).unwrap();
    let a: Vec<_> = pairs.iter().map(|p| p.0.clone()).collect();
    let b: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
    Dataset::aligned(
        ImageSet::from_rgb(&a, Domain::A, Split::Train).unwrap(),
        ImageSet::from_rgb(&b, Domain::B, Split::Train).unwrap(),
    )
    .unwrap()
}

fn unpaired_data(na: usize, nb: usize, seed: u64) -> Dataset<f64> {
    let (a, b) = synthetic_unpaired(na, nb, 16, seed).unwrap();
    Dataset::unpaired(
        ImageSet::from_rgb(&a, Domain::A, Split::Train).unwrap(),
        ImageSet::from_rgb(&b, Domain::B, Split::Train).unwrap(),
    )
    .unwrap()
}

fn hash_nets(nets: &[Network<f64>]) -> u64 {
    let mut h = DefaultHasher::new();
    for n in nets {
        for p in n.parameters() {
            for v in p.data() {
                v.to_bits().hash(&mut h);
            }
        }
    }
    h.finish()
}

#[test]
fn paired_records_decompose() {
    let data = paired_data(5, 1);
    for order in [StepOrder::GeneratorFirst, StepOrder::DiscriminatorFirst] {
        let mut cfg = tiny_config(Task::Paired);
        cfg.step_order = order;
        let mut state = TrainState::<f64>::new(cfg).unwrap();
        let records = state.run_epoch(&data).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records.iter().map(|r| r.step).collect::<Vec<_>>(), [0, 1, 2]);
        for r in &records {
            assert!((r.gen_total - (r.gen_gan + 100.0 * r.gen_recon)).abs() < 1e-6);
            assert!(r.disc_b.is_none());
        }
        assert_eq!((state.epoch(), state.step()), (1, 3));
    }
}

#[test]
fn unpaired_records_decompose() {
    let data = unpaired_data(3, 4, 2);
    let mut state = TrainState::<f64>::new(tiny_config(Task::Unpaired)).unwrap();
    let records = state.run_epoch(&data).unwrap();
    assert_eq!(records.len(), 2);
    for r in &records {
        assert!((r.gen_total - (r.gen_gan + 10.0 * r.gen_recon)).abs() < 1e-6);
        assert!(r.disc_b.is_some());
    }
}

#[test]
fn step_phases_touch_only_their_networks() {
    for (task, order) in [
        (Task::Paired, StepOrder::GeneratorFirst),
        (Task::Paired, StepOrder::DiscriminatorFirst),
        (Task::Unpaired, StepOrder::GeneratorFirst),
        (Task::Unpaired, StepOrder::DiscriminatorFirst),
    ] {
        let data = match task {
            Task::Paired => paired_data(2, 3),
            Task::Unpaired => unpaired_data(2, 2, 3),
        };
        let mut cfg = tiny_config(task);
        cfg.step_order = order;
        let mut state = TrainState::<f64>::new(cfg).unwrap();
        let mut last = (hash_nets(&state.models().generators), hash_nets(&state.models().discriminators));
        let mut phases = Vec::new();
        state
            .run_epoch_observed(&data, &mut |phase, m| {
                let now = (hash_nets(&m.generators), hash_nets(&m.discriminators));
                match phase {
                    Phase::Generator => {
                        assert_ne!(now.0, last.0);
                        assert_eq!(now.1, last.1);
                    }
                    Phase::Discriminator => {
                        assert_eq!(now.0, last.0);
                        assert_ne!(now.1, last.1);
                    }
                }
                phases.push(phase);
                last = now;
            })
            .unwrap();
        let expected = match order {
            StepOrder::GeneratorFirst => [Phase::Generator, Phase::Discriminator],
            StepOrder::DiscriminatorFirst => [Phase::Discriminator, Phase::Generator],
        };
        assert_eq!(phases, expected);
    }
}

#[test]
fn training_is_deterministic() {
    for task in [Task::Paired, Task::Unpaired] {
        let data = match task {
            Task::Paired => paired_data(4, 4),
            Task::Unpaired => unpaired_data(3, 4, 4),
        };
        let run = || {
            let mut s = TrainState::<f64>::new(tiny_config(task)).unwrap();
            let mut all = s.run_epoch(&data).unwrap();
            all.extend(s.run_epoch(&data).unwrap());
            (all, s)
        };
        let (r1, s1) = run();
        let (r2, s2) = run();
        assert_eq!(r1, r2);
        assert_eq!(s1, s2);
        let mut other = tiny_config(task);
        other.seed += 1;
        let r3 = TrainState::<f64>::new(other).unwrap().run_epoch(&data).unwrap();
        assert_ne!(r1[0], r3[0]);
    }
}

#[test]
fn resumed_state_continues_identically() {
    let data = paired_data(4, 5);
    let mut full = TrainState::<f64>::new(tiny_config(Task::Paired)).unwrap();
    full.run_epoch(&data).unwrap();
    let snapshot = full.clone();
    let (word, draws) = snapshot.rng().position();
    let mut resumed = TrainState::from_parts(
        snapshot.config().clone(),
        snapshot.models().clone(),
        snapshot.epoch(),
        snapshot.step(),
        RngStream::at_position(snapshot.config().seed, word, draws),
    )
    .unwrap();
    assert_eq!(full.run_epoch(&data).unwrap(), resumed.run_epoch(&data).unwrap());
    assert_eq!(full, resumed);
}

#[test]
fn from_parts_rejects_other_architecture() {
    let state = TrainState::<f64>::new(tiny_config(Task::Paired)).unwrap();
    let mut cfg = tiny_config(Task::Paired);
    cfg.gen_width = 8;
    let r = TrainState::from_parts(cfg, state.models().clone(), 0, 0, RngStream::new(0));
    assert!(matches!(r, Err(Error::SpecMismatch(_))));
}

#[test]
fn non_finite_loss_aborts_with_step() {
    let data = paired_data(4, 6);
    let mut state = TrainState::<f64>::new(tiny_config(Task::Paired)).unwrap();
    state.run_epoch(&data).unwrap();
    for p in state.models_mut().generators[0].parameters_mut() {
        p.data_mut().fill(f64::NAN);
    }
    match state.run_epoch(&data) {
        Err(Error::NonFinite { step, what }) => {
            assert_eq!(step, 2);
            assert_eq!(what, "generator loss");
        }
        other => panic!("expected a non-finite abort, got {other:?}"),
    }
}

#[test]
fn task_and_data_must_agree() {
    let mut state = TrainState::<f64>::new(tiny_config(Task::Paired)).unwrap();
    assert!(state.run_epoch(&unpaired_data(2, 2, 0)).is_err());
    let batch = Batch::Unpaired {
        a: Tensor::zeros(&[1, 3, 16, 16]),
        b: Tensor::zeros(&[1, 3, 16, 16]),
    };
    assert!(state.train_step(&batch).is_err());
}

#[test]
fn config_text_round_trip() {
    let mut cfg = tiny_config(Task::Unpaired);
    cfg.loss.kind = ReconKind::Mix(0.25);
    cfg.dataset = "data/x".into();
    cfg.lr = 1.0e-4;
    let parsed = TrainConfig::from_text(&cfg.to_text()).unwrap();
    assert_eq!(parsed, cfg);
}

#[test]
fn config_defaults_and_errors() {
    let paired = TrainConfig::from_text("task = paired\n").unwrap();
    assert_eq!(paired.loss.lambda, 100.0);
    assert_eq!(paired.jitter_upsize, 36);
    let unpaired = TrainConfig::from_text("# comment\ntask = unpaired\nimage_size = 64\n").unwrap();
    assert_eq!(unpaired.loss.lambda, 10.0);
    assert_eq!(unpaired.jitter_upsize, 72);
    assert!(TrainConfig::from_text("tsak = paired").is_err());
    assert!(TrainConfig::from_text("seed = 1\nseed = 2").is_err());
    assert!(TrainConfig::from_text("seed = abc").is_err());
    assert!(TrainConfig::from_text("just words").is_err());
    let mut bad = TrainConfig::new(Task::Paired);
    bad.image_size = 24;
    assert!(bad.validate().is_err());
    bad.image_size = 32;
    bad.loss.lambda = -1.0;
    assert!(bad.validate().is_err());
}

#[test]
fn translate_leaves_state_untouched() {
    let state = TrainState::<f64>::new(tiny_config(Task::Paired)).unwrap();
    let before = state.clone();
    let mut rng = RngStream::new(1);
    let out = state.translate(0, &Tensor::zeros(&[2, 3, 16, 16]), &mut rng).unwrap();
    assert_eq!(out.shape(), &[2, 3, 16, 16]);
    assert_eq!(state, before);
    assert!(state.translate(1, &Tensor::zeros(&[1, 3, 16, 16]), &mut rng).is_err());
}

