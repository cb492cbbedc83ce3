use super::loss::{gan_loss_discriminator, gan_loss_generator, recon_loss, LossVariant, ReconKind};
use crate::autograd::{Graph, Var};
use crate::error::Result;
use crate::models::{Bound, Network};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Anything that maps an image batch on the graph to another.
pub trait Module<T> {
    fn forward(&mut self, graph: &mut Graph<T>, input: Var, rng: &mut RngStream) -> Result<Var>;
}

/// A network together with its parameter leaves on the current graph.
pub struct Bonded<'a, T> {
    pub net: &'a mut Network<T>,
    pub bound: &'a Bound,
}

impl<'a, T: Scalar> Bonded<'a, T> {
    pub fn new(net: &'a mut Network<T>, bound: &'a Bound) -> Self {
        Bonded { net, bound }
    }
}

impl<T: Scalar> Module<T> for Bonded<'_, T> {
    fn forward(&mut self, graph: &mut Graph<T>, input: Var, rng: &mut RngStream) -> Result<Var> {
        self.net.forward(graph, self.bound, input, rng)
    }
}

impl<T, F> Module<T> for F
where
    F: FnMut(&mut Graph<T>, Var) -> Result<Var>,
{
    fn forward(&mut self, graph: &mut Graph<T>, input: Var, _rng: &mut RngStream) -> Result<Var> {
        self(graph, input)
    }
}

/// Nodes of the paired (conditional GAN) objective.
#[derive(Debug, Clone, Copy)]
pub struct PairedLosses {
    pub fake: Var,
    pub gan: Var,
    pub recon: Var,
    pub gen_total: Var,
    pub disc: Var,
}

/// Generator side of the paired objective: `gan(D(x, G(x))) + lambda * recon(G(x), y)`.
pub(crate) fn paired_generator_terms<T: Scalar>(
    graph: &mut Graph<T>,
    disc: &mut dyn Module<T>,
    x: Var,
    y: Var,
    fake: Var,
    variant: LossVariant,
    rng: &mut RngStream,
) -> Result<(Var, Var, Var)> {
    let pair = graph.concat_channels(x, fake)?;
    let logits = disc.forward(graph, pair, rng)?;
    let gan = gan_loss_generator(graph, logits);
    let recon = recon_loss(graph, fake, y, variant.kind)?;
    let weighted = graph.scale(recon, T::from_f64(variant.lambda));
    let total = graph.add(gan, weighted)?;
    Ok((gan, recon, total))
}

/// Discriminator side: real pair `(x, y)` against the detached fake pair.
pub(crate) fn paired_discriminator_term<T: Scalar>(
    graph: &mut Graph<T>,
    disc: &mut dyn Module<T>,
    x: Var,
    y: Var,
    fake: Var,
    rng: &mut RngStream,
) -> Result<Var> {
    let detached = graph.detach(fake);
    let real_pair = graph.concat_channels(x, y)?;
    let fake_pair = graph.concat_channels(x, detached)?;
    let real = disc.forward(graph, real_pair, rng)?;
    let fake = disc.forward(graph, fake_pair, rng)?;
    Ok(gan_loss_discriminator(graph, real, fake))
}

/// Both sides of the paired objective on a single fake sample `G(x, z)`.
pub fn paired_objective<T: Scalar>(
    graph: &mut Graph<T>,
    gen: &mut dyn Module<T>,
    disc: &mut dyn Module<T>,
    x: Var,
    y: Var,
    variant: LossVariant,
    rng: &mut RngStream,
) -> Result<PairedLosses> {
    let fake = gen.forward(graph, x, rng)?;
    let (gan, recon, gen_total) = paired_generator_terms(graph, disc, x, y, fake, variant, rng)?;
    let disc = paired_discriminator_term(graph, disc, x, y, fake, rng)?;
    Ok(PairedLosses {
        fake,
        gan,
        recon,
        gen_total,
        disc,
    })
}

/// `recon(G_B(G_A(a)), a) + recon(G_A(G_B(b)), b)`.
pub fn cycle_loss<T: Scalar>(
    graph: &mut Graph<T>,
    gen_a: &mut dyn Module<T>,
    gen_b: &mut dyn Module<T>,
    images_a: Var,
    images_b: Var,
    kind: ReconKind,
    rng: &mut RngStream,
) -> Result<Var> {
    let fake_b = gen_a.forward(graph, images_a, rng)?;
    let fake_a = gen_b.forward(graph, images_b, rng)?;
    cycle_from_fakes(graph, gen_a, gen_b, images_a, images_b, fake_a, fake_b, kind, rng)
}

#[allow(clippy::too_many_arguments)]
fn cycle_from_fakes<T: Scalar>(
    graph: &mut Graph<T>,
    gen_a: &mut dyn Module<T>,
    gen_b: &mut dyn Module<T>,
    images_a: Var,
    images_b: Var,
    fake_a: Var,
    fake_b: Var,
    kind: ReconKind,
    rng: &mut RngStream,
) -> Result<Var> {
    let rec_a = gen_b.forward(graph, fake_b, rng)?;
    let rec_b = gen_a.forward(graph, fake_a, rng)?;
    let forward = recon_loss(graph, rec_a, images_a, kind)?;
    let backward = recon_loss(graph, rec_b, images_b, kind)?;
    graph.add(forward, backward)
}

/// Nodes of the unpaired (cycle-consistent) objective.
#[derive(Debug, Clone, Copy)]
pub struct UnpairedLosses {
    pub fake_a: Var,
    pub fake_b: Var,
    /// adversarial term of `G_A` (judged by `D_B`)
    pub gan_ab: Var,
    /// adversarial term of `G_B` (judged by `D_A`)
    pub gan_ba: Var,
    pub cycle: Var,
    pub gen_total: Var,
    pub disc_a: Var,
    pub disc_b: Var,
}

/// The four networks of the unpaired setting. `G_A: A -> B`, `G_B: B -> A`,
/// `D_A` judges domain A, `D_B` judges domain B.
pub struct CycleNets<'a, T> {
    pub gen_a: &'a mut dyn Module<T>,
    pub gen_b: &'a mut dyn Module<T>,
    pub disc_a: &'a mut dyn Module<T>,
    pub disc_b: &'a mut dyn Module<T>,
}

fn disc_input<T: Scalar>(graph: &mut Graph<T>, condition: Option<Var>, candidate: Var) -> Result<Var> {
    match condition {
        Some(c) => graph.concat_channels(c, candidate),
        None => Ok(candidate),
    }
}

/// Generator side: both adversarial terms plus `lambda * cycle`. `fakes`
/// reuses `(G_B(I_B), G_A(I_A))` already on the graph.
#[allow(clippy::too_many_arguments)]
pub(crate) fn unpaired_generator_terms<T: Scalar>(
    graph: &mut Graph<T>,
    nets: &mut CycleNets<'_, T>,
    images_a: Var,
    images_b: Var,
    fakes: Option<(Var, Var)>,
    variant: LossVariant,
    conditional: bool,
    rng: &mut RngStream,
) -> Result<(Var, Var, Var, Var, Var, Var)> {
    let (fake_a, fake_b) = match fakes {
        Some(f) => f,
        None => {
            let fake_b = nets.gen_a.forward(graph, images_a, rng)?;
            let fake_a = nets.gen_b.forward(graph, images_b, rng)?;
            (fake_a, fake_b)
        }
    };
    let in_b = disc_input(graph, conditional.then_some(images_a), fake_b)?;
    let in_a = disc_input(graph, conditional.then_some(images_b), fake_a)?;
    let logits_b = nets.disc_b.forward(graph, in_b, rng)?;
    let logits_a = nets.disc_a.forward(graph, in_a, rng)?;
    let gan_ab = gan_loss_generator(graph, logits_b);
    let gan_ba = gan_loss_generator(graph, logits_a);
    let cycle = cycle_from_fakes(
        graph,
        nets.gen_a,
        nets.gen_b,
        images_a,
        images_b,
        fake_a,
        fake_b,
        variant.kind,
        rng,
    )?;
    let adversarial = graph.add(gan_ab, gan_ba)?;
    let weighted = graph.scale(cycle, T::from_f64(variant.lambda));
    let total = graph.add(adversarial, weighted)?;
    Ok((fake_a, fake_b, gan_ab, gan_ba, cycle, total))
}

/// Discriminator side: `(disc_a, disc_b)` against detached fakes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn unpaired_discriminator_terms<T: Scalar>(
    graph: &mut Graph<T>,
    disc_a: &mut dyn Module<T>,
    disc_b: &mut dyn Module<T>,
    images_a: Var,
    images_b: Var,
    fake_a: Var,
    fake_b: Var,
    conditional: bool,
    rng: &mut RngStream,
) -> Result<(Var, Var)> {
    let fake_a = graph.detach(fake_a);
    let fake_b = graph.detach(fake_b);
    let real_in_a = disc_input(graph, conditional.then_some(images_b), images_a)?;
    let fake_in_a = disc_input(graph, conditional.then_some(images_b), fake_a)?;
    let real_in_b = disc_input(graph, conditional.then_some(images_a), images_b)?;
    let fake_in_b = disc_input(graph, conditional.then_some(images_a), fake_b)?;
    let ra = disc_a.forward(graph, real_in_a, rng)?;
    let fa = disc_a.forward(graph, fake_in_a, rng)?;
    let rb = disc_b.forward(graph, real_in_b, rng)?;
    let fb = disc_b.forward(graph, fake_in_b, rng)?;
    Ok((gan_loss_discriminator(graph, ra, fa), gan_loss_discriminator(graph, rb, fb)))
}

/// Full unpaired objective on one pair of domain batches.
pub fn unpaired_objective<T: Scalar>(
    graph: &mut Graph<T>,
    nets: &mut CycleNets<'_, T>,
    images_a: Var,
    images_b: Var,
    variant: LossVariant,
    conditional: bool,
    rng: &mut RngStream,
) -> Result<UnpairedLosses> {
    let (fake_a, fake_b, gan_ab, gan_ba, cycle, gen_total) =
        unpaired_generator_terms(graph, nets, images_a, images_b, None, variant, conditional, rng)?;
    let (disc_a, disc_b) = unpaired_discriminator_terms(
        graph,
        nets.disc_a,
        nets.disc_b,
        images_a,
        images_b,
        fake_a,
        fake_b,
        conditional,
        rng,
    )?;
    Ok(UnpairedLosses {
        fake_a,
        fake_b,
        gan_ab,
        gan_ba,
        cycle,
        gen_total,
        disc_a,
        disc_b,
    })
}
