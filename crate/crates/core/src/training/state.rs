use alloc::vec::Vec;

use super::objective::{
    paired_discriminator_term, paired_generator_terms, unpaired_discriminator_terms, unpaired_generator_terms, Bonded,
    CycleNets,
};
use super::{LossRecord, Task, TrainConfig};
use crate::autograd::{Graph, Mode, Var};
use crate::data::{Batch, BatchIter, Dataset};
use crate::error::{Error, Result};
use crate::models::{patchgan_spec, unet_spec, Bound, ModelSpec, Network};
use crate::optim::AdamState;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Which optimizer step just completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Generator,
    Discriminator,
}

/// Networks and optimizer moments. Paired runs hold one generator and one
/// discriminator; unpaired runs hold `[G_A, G_B]` and `[D_A, D_B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Models<T> {
    pub generators: Vec<Network<T>>,
    pub discriminators: Vec<Network<T>>,
    pub gen_opt: AdamState<T>,
    pub disc_opt: AdamState<T>,
}

impl<T: Scalar> Models<T> {
    /// Networks under their checkpoint names.
    pub fn named(&self) -> Vec<(&'static str, &Network<T>)> {
        let names: &[&'static str] = if self.generators.len() == 1 {
            &["generator", "discriminator"]
        } else {
            &["generator_a", "generator_b", "discriminator_a", "discriminator_b"]
        };
        names.iter().copied().zip(self.generators.iter().chain(&self.discriminators)).collect()
    }

    pub fn from_networks(generators: Vec<Network<T>>, discriminators: Vec<Network<T>>) -> Self {
        let gen_opt = AdamState::for_params(generators.iter().flat_map(|n| n.parameters()));
        let disc_opt = AdamState::for_params(discriminators.iter().flat_map(|n| n.parameters()));
        Models {
            generators,
            discriminators,
            gen_opt,
            disc_opt,
        }
    }
}

/// Model specs `(generators, discriminators)` a config describes.
pub(crate) fn model_specs(config: &TrainConfig) -> Result<(Vec<ModelSpec>, Vec<ModelSpec>)> {
    let c = config.channels;
    let mut gen = unet_spec(c, c, config.gen_width, config.gen_depth, config.skip)?;
    gen.batchnorm = config.batchnorm();
    gen.init_std = config.init_std;
    let disc_in = match config.task {
        Task::Paired => 2 * c,
        Task::Unpaired if config.unpaired_conditional => 2 * c,
        Task::Unpaired => c,
    };
    let mut disc = patchgan_spec(disc_in, config.patch, config.disc_width);
    disc.batchnorm = config.batchnorm();
    disc.init_std = config.init_std;
    let copies = match config.task {
        Task::Paired => 1,
        Task::Unpaired => 2,
    };
    Ok((alloc::vec![gen; copies], alloc::vec![disc; copies]))
}

/// A training run in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<T> {
    config: TrainConfig,
    models: Models<T>,
    epoch: u64,
    step: u64,
    rng: RngStream,
}

fn values<T: Scalar>(graph: &Graph<T>, v: Var) -> f64 {
    graph.value(v).item().as_f64()
}

fn check_finite(step: u64, what: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { step, what })
    }
}

fn grads_of<T: Scalar>(graph: &Graph<T>, loss: Var, nets: &[Network<T>], bounds: &[Bound]) -> Result<Vec<Tensor<T>>> {
    let grads = graph.backward(loss)?;
    Ok(nets
        .iter()
        .zip(bounds)
        .flat_map(|(n, b)| n.gradients(graph, b, &grads))
        .collect())
}

impl<T: Scalar> TrainState<T> {
    /// Fresh networks initialised from `config.seed`.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = RngStream::new(config.seed);
        let (gens, discs) = model_specs(&config)?;
        let generators = gens
            .into_iter()
            .map(|s| Network::new(s, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let discriminators = discs
            .into_iter()
            .map(|s| Network::new(s, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainState {
            config,
            models: Models::from_networks(generators, discriminators),
            epoch: 0,
            step: 0,
            rng,
        })
    }

    /// Reassemble a saved run. The networks must match the specs `config` describes.
    pub fn from_parts(config: TrainConfig, models: Models<T>, epoch: u64, step: u64, rng: RngStream) -> Result<Self> {
        config.validate()?;
        let (gens, discs) = model_specs(&config)?;
        let specs_match = models.generators.len() == gens.len()
            && models.discriminators.len() == discs.len()
            && models.generators.iter().zip(&gens).all(|(n, s)| n.spec() == s)
            && models.discriminators.iter().zip(&discs).all(|(n, s)| n.spec() == s);
        if !specs_match {
            return Err(Error::SpecMismatch("saved networks do not match the configured architecture".into()));
        }
        let gen_params: Vec<&Tensor<T>> = models.generators.iter().flat_map(|n| n.parameters()).collect();
        let disc_params: Vec<&Tensor<T>> = models.discriminators.iter().flat_map(|n| n.parameters()).collect();
        for (opt, params) in [(&models.gen_opt, &gen_params), (&models.disc_opt, &disc_params)] {
            let ok = opt.first.len() == params.len()
                && opt.second.len() == params.len()
                && params
                    .iter()
                    .zip(&opt.first)
                    .zip(&opt.second)
                    .all(|((p, m), v)| p.shape() == m.shape() && p.shape() == v.shape());
            if !ok {
                return Err(Error::SpecMismatch("optimizer state does not match the parameters".into()));
            }
        }
        Ok(TrainState {
            config,
            models,
            epoch,
            step,
            rng,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn models(&self) -> &Models<T> {
        &self.models
    }

    pub fn models_mut(&mut self) -> &mut Models<T> {
        &mut self.models
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// One pass over `dataset`, one optimizer step per side per batch.
    pub fn run_epoch(&mut self, dataset: &Dataset<T>) -> Result<Vec<LossRecord>> {
        self.run_epoch_observed(dataset, &mut |_, _| {})
    }

    pub fn run_epoch_observed(
        &mut self,
        dataset: &Dataset<T>,
        observer: &mut dyn FnMut(Phase, &Models<T>),
    ) -> Result<Vec<LossRecord>> {
        let task_matches = dataset.is_paired() == (self.config.task == Task::Paired);
        if !task_matches {
            return Err(Error::invalid("train", "dataset layout does not match the configured task"));
        }
        let batches: Vec<Batch<T>> =
            BatchIter::new(dataset, self.config.batch_size, self.config.augment(), &mut self.rng)?
                .collect::<Result<_>>()?;
        let mut records = Vec::with_capacity(batches.len());
        for batch in &batches {
            records.push(self.train_step_observed(batch, observer)?);
        }
        self.epoch += 1;
        Ok(records)
    }

    pub fn train_step(&mut self, batch: &Batch<T>) -> Result<LossRecord> {
        self.train_step_observed(batch, &mut |_, _| {})
    }

    /// One generator and one discriminator Adam step on `batch`, calling
    /// `observer` after each.
    pub fn train_step_observed(
        &mut self,
        batch: &Batch<T>,
        observer: &mut dyn FnMut(Phase, &Models<T>),
    ) -> Result<LossRecord> {
        for net in self.models.generators.iter_mut().chain(&mut self.models.discriminators) {
            net.set_mode(Mode::Train);
        }
        let record = match batch {
            Batch::Paired { input, target } if self.config.task == Task::Paired => {
                self.paired_step(input, target, observer)?
            }
            Batch::Unpaired { a, b } if self.config.task == Task::Unpaired => self.unpaired_step(a, b, observer)?,
            _ => return Err(Error::invalid("train", "batch layout does not match the configured task")),
        };
        self.step += 1;
        Ok(record)
    }

    fn update(&mut self, phase: Phase, grads: &[Tensor<T>]) -> Result<()> {
        let adam = self.config.adam();
        let models = &mut self.models;
        let (nets, opt) = match phase {
            Phase::Generator => (&mut models.generators, &mut models.gen_opt),
            Phase::Discriminator => (&mut models.discriminators, &mut models.disc_opt),
        };
        let mut params: Vec<&mut Tensor<T>> = nets.iter_mut().flat_map(|n| n.parameters_mut()).collect();
        adam.step(&mut params, grads, opt)
    }

    fn paired_step(
        &mut self,
        input: &Tensor<T>,
        target: &Tensor<T>,
        observer: &mut dyn FnMut(Phase, &Models<T>),
    ) -> Result<LossRecord> {
        let step = self.step;
        let variant = self.config.loss;
        let disc_first = self.config.step_order == super::StepOrder::DiscriminatorFirst;
        let mut graph = Graph::new();
        let x = graph.constant(input.clone());
        let y = graph.constant(target.clone());
        let gen_bound = self.models.generators[0].bind(&mut graph);
        let fake = self.models.generators[0].forward(&mut graph, &gen_bound, x, &mut self.rng)?;

        let mut disc_bound = self.models.discriminators[0].bind(&mut graph);
        let mut disc_loss = None;
        if disc_first {
            let loss = self.paired_disc(&mut graph, &disc_bound, x, y, fake, step)?;
            disc_loss = Some(values(&graph, loss));
            observer(Phase::Discriminator, &self.models);
            disc_bound = self.models.discriminators[0].bind(&mut graph);
        }

        let (gan, recon, total) = {
            let mut disc = Bonded::new(&mut self.models.discriminators[0], &disc_bound);
            paired_generator_terms(&mut graph, &mut disc, x, y, fake, variant, &mut self.rng)?
        };
        check_finite(step, "generator loss", values(&graph, total))?;
        let grads = grads_of(&graph, total, &self.models.generators, core::slice::from_ref(&gen_bound))?;
        self.update(Phase::Generator, &grads)?;
        observer(Phase::Generator, &self.models);

        let disc = match disc_loss {
            Some(d) => d,
            None => {
                let loss = self.paired_disc(&mut graph, &disc_bound, x, y, fake, step)?;
                observer(Phase::Discriminator, &self.models);
                values(&graph, loss)
            }
        };
        Ok(LossRecord {
            step,
            gen_gan: values(&graph, gan),
            gen_recon: values(&graph, recon),
            gen_total: values(&graph, total),
            disc,
            disc_b: None,
        })
    }

    fn paired_disc(&mut self, graph: &mut Graph<T>, bound: &Bound, x: Var, y: Var, fake: Var, step: u64) -> Result<Var> {
        let loss = {
            let mut disc = Bonded::new(&mut self.models.discriminators[0], bound);
            paired_discriminator_term(graph, &mut disc, x, y, fake, &mut self.rng)?
        };
        check_finite(step, "discriminator loss", values(graph, loss))?;
        let grads = grads_of(graph, loss, &self.models.discriminators, core::slice::from_ref(bound))?;
        self.update(Phase::Discriminator, &grads)?;
        Ok(loss)
    }

    fn unpaired_step(
        &mut self,
        a: &Tensor<T>,
        b: &Tensor<T>,
        observer: &mut dyn FnMut(Phase, &Models<T>),
    ) -> Result<LossRecord> {
        let step = self.step;
        let variant = self.config.loss;
        let conditional = self.config.unpaired_conditional;
        let disc_first = self.config.step_order == super::StepOrder::DiscriminatorFirst;
        let mut graph = Graph::new();
        let ia = graph.constant(a.clone());
        let ib = graph.constant(b.clone());
        let gen_bounds: Vec<Bound> = self.models.generators.iter().map(|n| n.bind(&mut graph)).collect();

        let mut disc_values = None;
        let mut fakes = None;
        if disc_first {
            let (ga, gb) = self.models.generators.split_at_mut(1);
            let fake_b = ga[0].forward(&mut graph, &gen_bounds[0], ia, &mut self.rng)?;
            let fake_a = gb[0].forward(&mut graph, &gen_bounds[1], ib, &mut self.rng)?;
            let d = self.unpaired_disc(&mut graph, ia, ib, fake_a, fake_b, step)?;
            disc_values = Some(d);
            fakes = Some((fake_a, fake_b));
            observer(Phase::Discriminator, &self.models);
        }
        let disc_bounds: Vec<Bound> = self.models.discriminators.iter().map(|n| n.bind(&mut graph)).collect();

        let (fake_a, fake_b, gan_ab, gan_ba, cycle, total) = {
            let (ga, gb) = self.models.generators.split_at_mut(1);
            let (da, db) = self.models.discriminators.split_at_mut(1);
            let mut nets = CycleNets {
                gen_a: &mut Bonded::new(&mut ga[0], &gen_bounds[0]),
                gen_b: &mut Bonded::new(&mut gb[0], &gen_bounds[1]),
                disc_a: &mut Bonded::new(&mut da[0], &disc_bounds[0]),
                disc_b: &mut Bonded::new(&mut db[0], &disc_bounds[1]),
            };
            unpaired_generator_terms(&mut graph, &mut nets, ia, ib, fakes, variant, conditional, &mut self.rng)?
        };
        check_finite(step, "generator loss", values(&graph, total))?;
        let grads = grads_of(&graph, total, &self.models.generators, &gen_bounds)?;
        self.update(Phase::Generator, &grads)?;
        observer(Phase::Generator, &self.models);

        let (disc_a, disc_b) = match disc_values {
            Some(d) => d,
            None => {
                let d = self.unpaired_disc(&mut graph, ia, ib, fake_a, fake_b, step)?;
                observer(Phase::Discriminator, &self.models);
                d
            }
        };
        let gen_gan = values(&graph, gan_ab) + values(&graph, gan_ba);
        Ok(LossRecord {
            step,
            gen_gan,
            gen_recon: values(&graph, cycle),
            gen_total: values(&graph, total),
            disc: disc_a,
            disc_b: Some(disc_b),
        })
    }

    fn unpaired_disc(
        &mut self,
        graph: &mut Graph<T>,
        ia: Var,
        ib: Var,
        fake_a: Var,
        fake_b: Var,
        step: u64,
    ) -> Result<(f64, f64)> {
        let bounds: Vec<Bound> = self.models.discriminators.iter().map(|n| n.bind(graph)).collect();
        let (loss_a, loss_b) = {
            let (da, db) = self.models.discriminators.split_at_mut(1);
            let mut disc_a = Bonded::new(&mut da[0], &bounds[0]);
            let mut disc_b = Bonded::new(&mut db[0], &bounds[1]);
            unpaired_discriminator_terms(
                graph,
                &mut disc_a,
                &mut disc_b,
                ia,
                ib,
                fake_a,
                fake_b,
                self.config.unpaired_conditional,
                &mut self.rng,
            )?
        };
        let (va, vb) = (values(graph, loss_a), values(graph, loss_b));
        check_finite(step, "discriminator A loss", va)?;
        check_finite(step, "discriminator B loss", vb)?;
        let total = graph.add(loss_a, loss_b)?;
        let grads = grads_of(graph, total, &self.models.discriminators, &bounds)?;
        self.update(Phase::Discriminator, &grads)?;
        Ok((va, vb))
    }

    /// Generator outputs for `inputs` (`[N, C, H, W]`) in inference mode, using
    /// `generators[index]`. Training state and the run's stream are untouched.
    pub fn translate(&self, index: usize, inputs: &Tensor<T>, rng: &mut RngStream) -> Result<Tensor<T>> {
        let mut gen = self
            .models
            .generators
            .get(index)
            .ok_or_else(|| Error::invalid("translate", "no such generator"))?
            .clone();
        gen.set_mode(Mode::Eval);
        gen.infer(inputs, rng)
    }
}
