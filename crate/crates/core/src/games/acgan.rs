//! Auxiliary-classifier GAN at toy scale.
//!
//! The discriminator shares one feature trunk between a real/fake head and a
//! class head. Unlike the three-player game, the generator *minimizes* the
//! class loss on its own samples, and the class head doubles as the
//! comparison classifier.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::games::classifier::{Classifier, ClassifierLoss};
use crate::games::sample::{to_batch, LabeledSample};
use crate::games::state::{draw_latent, sample_generator, sample_real, GameConfig, GeneratorLoss};
use crate::nn::{
    adam_step, cross_entropy_loss, log_clamped, one_minus, Activation, AdamState, BoundParams,
    Head, MlpSpec, Network, ParameterStore,
};
use crate::seed::{derive_seed, rng};

#[derive(Clone, Debug, PartialEq)]
pub struct AcganDiscriminator {
    pub trunk: Network,
    pub source: Network,
    pub class_head: Network,
}

struct Heads {
    source: Var,
    class_logits: Var,
}

struct Binding {
    trunk: BoundParams,
    source: BoundParams,
    class_head: BoundParams,
}

impl AcganDiscriminator {
    pub fn init(config: &GameConfig, seed: u64) -> Result<Self> {
        let width = *config.discriminator_hidden.last().ok_or_else(|| {
            Error::InvalidSpec("the auxiliary-classifier discriminator needs a hidden layer".into())
        })?;
        let mut trunk_sizes = vec![config.feature_dim];
        trunk_sizes.extend_from_slice(&config.discriminator_hidden);
        let trunk = MlpSpec::new(trunk_sizes, Activation::Relu, Head::None)?;
        let source = MlpSpec::new(vec![width, 1], Activation::Relu, Head::Sigmoid)?;
        let class_head = MlpSpec::linear(width, config.num_classes)?;
        Ok(Self {
            trunk: Network::init(trunk, derive_seed(seed, "init.acgan.trunk")),
            source: Network::init(source, derive_seed(seed, "init.acgan.source")),
            class_head: Network::init(class_head, derive_seed(seed, "init.acgan.class")),
        })
    }

    fn bind(&self, graph: &mut Graph) -> Binding {
        Binding {
            trunk: self.trunk.params.bind(graph),
            source: self.source.params.bind(graph),
            class_head: self.class_head.params.bind(graph),
        }
    }

    fn heads(&self, graph: &mut Graph, b: &Binding, x: Var) -> Result<Heads> {
        let h = crate::nn::mlp_forward(graph, &self.trunk.spec, &b.trunk, x, None)?;
        let source = crate::nn::mlp_forward(graph, &self.source.spec, &b.source, h, None)?;
        let class_logits =
            crate::nn::mlp_forward(graph, &self.class_head.spec, &b.class_head, h, None)?;
        Ok(Heads {
            source,
            class_logits,
        })
    }

    pub fn flat_params(&self) -> ParameterStore {
        let mut out = self.trunk.params.prefixed("trunk");
        out.merge(self.source.params.prefixed("source"));
        out.merge(self.class_head.params.prefixed("class"));
        out
    }

    fn load_flat_params(&mut self, flat: &ParameterStore) {
        self.trunk.params = flat.extract("trunk");
        self.source.params = flat.extract("source");
        self.class_head.params = flat.extract("class");
    }

    /// The class head on top of the trunk, as a stand-alone classifier.
    pub fn classifier(&self) -> Result<Classifier> {
        Classifier::with_trunk(
            Some(self.trunk.clone()),
            self.class_head.clone(),
            ClassifierLoss::CrossEntropy,
        )
    }
}

fn flat_gradients(graph: &Graph, b: &Binding) -> ParameterStore {
    let mut out = b.trunk.gradients(graph).prefixed("trunk");
    out.merge(b.source.gradients(graph).prefixed("source"));
    out.merge(b.class_head.gradients(graph).prefixed("class"));
    out
}

#[derive(Clone, Debug)]
pub struct AcganOutcome {
    pub generator: Network,
    pub discriminator: AcganDiscriminator,
    pub classifier: Classifier,
    /// `(discriminator loss, generator loss)` per iteration.
    pub trace: Vec<(f64, f64)>,
}

/// Trains for `config.cgan_iterations` alternating steps.
///
/// Discriminator loss: `-[mean log S(x) + mean log(1 - S(x_g))] + CE(x) + CE(x_g)`.
/// Generator loss: the configured GAN term on `S(G(z, y))` plus `CE(G(z, y), y)`.
pub fn train_acgan(config: &GameConfig, data: &[LabeledSample], seed: u64) -> Result<AcganOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training data".into()));
    }
    let mut generator = config.init_generator(seed)?;
    let mut disc = AcganDiscriminator::init(config, seed)?;
    let mut opt_g = AdamState::new(config.gan_adam, &generator.params);
    let mut opt_d = AdamState::new(config.gan_adam, &disc.flat_params());
    let mut rng_d = rng(derive_seed(seed, "acgan.stream.discriminator"));
    let mut rng_g = rng(derive_seed(seed, "acgan.stream.generator"));
    let m = config.batch_size;
    let mut trace = Vec::with_capacity(config.cgan_iterations);

    for iteration in 0..config.cgan_iterations {
        let diverged = |what, v: f64| Error::Diverged {
            what,
            iteration,
            detail: format!("loss = {v}"),
        };

        // discriminator
        let real = sample_real(data, m, &mut rng_d);
        let fake = sample_generator(
            &generator,
            config.latent_dim,
            config.num_classes,
            m,
            &mut rng_d,
        )?;
        let (xr, yr) = to_batch(&real)?;
        let (xf, yf) = to_batch(&fake)?;
        let mut graph = Graph::new();
        let b = disc.bind(&mut graph);
        let xr = graph.leaf(xr);
        let xf = graph.leaf(xf);
        let hr = disc.heads(&mut graph, &b, xr)?;
        let hf = disc.heads(&mut graph, &b, xf)?;
        let log_real = log_clamped(&mut graph, hr.source)?;
        let real_term = graph.mean(log_real);
        let fake_src = one_minus(&mut graph, hf.source)?;
        let log_fake = log_clamped(&mut graph, fake_src)?;
        let fake_term = graph.mean(log_fake);
        let source_obj = graph.add(real_term, fake_term)?;
        let source_loss = graph.scale(source_obj, -1.0);
        let ce_real = cross_entropy_loss(&mut graph, hr.class_logits, &yr)?;
        let ce_fake = cross_entropy_loss(&mut graph, hf.class_logits, &yf)?;
        let ce = graph.add(ce_real, ce_fake)?;
        let d_loss = graph.add(source_loss, ce)?;
        let d_value = graph.value(d_loss).item();
        if !d_value.is_finite() {
            return Err(diverged("acgan discriminator", d_value));
        }
        graph.backward(d_loss)?;
        let grads = flat_gradients(&graph, &b);
        let mut flat = disc.flat_params();
        adam_step(&mut flat, &grads, &mut opt_d, config.gan_lr, 0.0)?;
        disc.load_flat_params(&flat);

        // generator
        let (z, labels) = draw_latent(&mut rng_g, m, config.latent_dim, config.num_classes);
        let mut graph = Graph::new();
        let zv = graph.leaf(z);
        let (x, gb) = generator.forward(&mut graph, zv, Some(&labels))?;
        let b = disc.bind(&mut graph);
        let h = disc.heads(&mut graph, &b, x)?;
        let gan = match config.generator_loss {
            GeneratorLoss::Saturating => {
                let f = one_minus(&mut graph, h.source)?;
                let l = log_clamped(&mut graph, f)?;
                graph.mean(l)
            }
            GeneratorLoss::NonSaturating => {
                let l = log_clamped(&mut graph, h.source)?;
                let mean = graph.mean(l);
                graph.scale(mean, -1.0)
            }
        };
        let ce = cross_entropy_loss(&mut graph, h.class_logits, &labels)?;
        let g_loss = graph.add(gan, ce)?;
        let g_value = graph.value(g_loss).item();
        if !g_value.is_finite() {
            return Err(diverged("acgan generator", g_value));
        }
        graph.backward(g_loss)?;
        let grads = gb.gradients(&graph);
        adam_step(
            &mut generator.params,
            &grads,
            &mut opt_g,
            config.gan_lr,
            0.0,
        )?;

        trace.push((d_value, g_value));
    }

    let classifier = disc.classifier()?;
    Ok(AcganOutcome {
        generator,
        discriminator: disc,
        classifier,
        trace,
    })
}
