//! One game between generator, discriminator and classifier, and the three
//! update rules that move it forward.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Array, Graph, Var};
use crate::error::{Error, Result};
use crate::games::classifier::{Classifier, ClassifierLoss};
use crate::games::sample::{from_batch, to_batch, BatchPlan, LabeledSample};
use crate::nn::{
    adam_step, lambda_schedule, log_clamped, lr_schedule, one_minus, progress, Activation,
    AdamConfig, AdamState, Head, MlpSpec, Network, ParameterStore, ScheduleParams,
};
use crate::seed::{derive_seed, rng, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorLoss {
    /// `log(1 - D(G(z, y), y))`, descended.
    Saturating,
    /// `-log D(G(z, y), y)`, descended.
    NonSaturating,
}

impl GeneratorLoss {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorLoss::Saturating => "saturating",
            GeneratorLoss::NonSaturating => "non-saturating",
        }
    }
}

/// Network sizes, optimizer settings and iteration counts for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct GameConfig {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    /// Empty for a linear classifier.
    pub classifier_hidden: Vec<usize>,
    pub classifier_loss: ClassifierLoss,
    /// `m`, shared by every batch of every player.
    pub batch_size: usize,
    pub gan_lr: f64,
    pub gan_adam: AdamConfig,
    pub classifier_lr: f64,
    pub classifier_adam: AdamConfig,
    /// Applied to classifier weights only.
    pub weight_decay: f64,
    pub generator_loss: GeneratorLoss,
    pub w_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub plan: BatchPlan,
    /// Share of generated samples in augmented classifier batches.
    pub augment_fraction: f64,
    pub cgan_iterations: usize,
    pub game_iterations: usize,
    pub classifier_iterations: usize,
    pub freeze_classifier: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            num_classes: 2,
            feature_dim: 2,
            latent_dim: 8,
            generator_hidden: vec![32, 32],
            discriminator_hidden: vec![32, 32],
            classifier_hidden: Vec::new(),
            classifier_loss: ClassifierLoss::Hinge,
            batch_size: 64,
            gan_lr: 2e-4,
            gan_adam: AdamConfig::GAN,
            classifier_lr: 1e-3,
            classifier_adam: AdamConfig::CLASSIFIER,
            weight_decay: 1e-4,
            generator_loss: GeneratorLoss::Saturating,
            w_c: ScheduleParams::DEFAULT_W_C,
            alpha: ScheduleParams::DEFAULT_ALPHA,
            beta: ScheduleParams::DEFAULT_BETA,
            plan: BatchPlan::default(),
            augment_fraction: 0.5,
            cgan_iterations: 2000,
            game_iterations: 1000,
            classifier_iterations: 2000,
            freeze_classifier: false,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.num_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if self.feature_dim == 0 || self.latent_dim == 0 || self.batch_size == 0 {
            return bad("feature_dim, latent_dim and batch_size must be > 0".into());
        }
        if self.classifier_loss == ClassifierLoss::Hinge && self.num_classes != 2 {
            return bad("hinge classifiers are binary".into());
        }
        for (name, v) in [
            ("gan_lr", self.gan_lr),
            ("classifier_lr", self.classifier_lr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            ));
        }
        if !(0.0..=1.0).contains(&self.augment_fraction) {
            return bad(format!(
                "augment_fraction must lie in [0, 1], got {}",
                self.augment_fraction
            ));
        }
        self.schedule()?;
        self.plan.validate()?;
        self.generator_spec()?;
        self.discriminator_spec()?;
        self.classifier_spec()?;
        Ok(())
    }

    /// Schedule inputs at `p = 0` with `μ₀ = 1`; scale by the real `μ₀`.
    pub fn schedule(&self) -> Result<ScheduleParams> {
        ScheduleParams::new(0.0, self.w_c, self.alpha, self.beta, 1.0)
    }

    fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend_from_slice(hidden);
        s.push(output);
        s
    }

    /// `[latent + classes, hidden.., feature_dim]`, linear output.
    pub fn generator_spec(&self) -> Result<MlpSpec> {
        MlpSpec::new(
            Self::sizes(
                self.latent_dim + self.num_classes,
                &self.generator_hidden,
                self.feature_dim,
            ),
            Activation::Relu,
            Head::Linear,
        )
    }

    /// `[feature_dim + classes, hidden.., 1]`, sigmoid output.
    pub fn discriminator_spec(&self) -> Result<MlpSpec> {
        MlpSpec::new(
            Self::sizes(
                self.feature_dim + self.num_classes,
                &self.discriminator_hidden,
                1,
            ),
            Activation::Relu,
            Head::Sigmoid,
        )
    }

    pub fn classifier_spec(&self) -> Result<MlpSpec> {
        let out = match self.classifier_loss {
            ClassifierLoss::Hinge => 1,
            ClassifierLoss::CrossEntropy => self.num_classes,
        };
        MlpSpec::new(
            Self::sizes(self.feature_dim, &self.classifier_hidden, out),
            Activation::Relu,
            Head::Linear,
        )
    }

    pub fn init_generator(&self, seed: u64) -> Result<Network> {
        Ok(Network::init(
            self.generator_spec()?,
            derive_seed(seed, "init.generator"),
        ))
    }

    pub fn init_discriminator(&self, seed: u64) -> Result<Network> {
        Ok(Network::init(
            self.discriminator_spec()?,
            derive_seed(seed, "init.discriminator"),
        ))
    }

    pub fn init_classifier(&self, seed: u64) -> Result<Classifier> {
        let net = Network::init(
            self.classifier_spec()?,
            derive_seed(seed, "init.classifier"),
        );
        Classifier::new(net, self.classifier_loss)
    }
}

/// Draws `m` class ids uniformly, then an `[m, latent_dim]` standard normal
/// block, in that order.
pub fn draw_latent(
    rng: &mut Rng,
    m: usize,
    latent_dim: usize,
    num_classes: usize,
) -> (Array, Vec<usize>) {
    let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..num_classes)).collect();
    let z: Vec<f64> = (0..m * latent_dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let z = Array::matrix(m, latent_dim, z).expect("sized");
    (z, labels)
}

/// `m` samples `(G(z, y), y)` with `z ~ N(0, I)` and `y` uniform.
pub fn sample_generator(
    generator: &Network,
    latent_dim: usize,
    num_classes: usize,
    m: usize,
    rng: &mut Rng,
) -> Result<Vec<LabeledSample>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let (z, labels) = draw_latent(rng, m, latent_dim, num_classes);
    let x = generator.eval(&z, Some(&labels))?;
    Ok(from_batch(&x, &labels))
}

/// `m` draws with replacement from `data`.
pub fn sample_real(data: &[LabeledSample], m: usize, rng: &mut Rng) -> Vec<LabeledSample> {
    (0..m)
        .map(|_| data[rng.random_range(0..data.len())].clone())
        .collect()
}

fn gan_generator_term(graph: &mut Graph, d_out: Var, kind: GeneratorLoss) -> Result<Var> {
    Ok(match kind {
        GeneratorLoss::Saturating => {
            let fake = one_minus(graph, d_out)?;
            let l = log_clamped(graph, fake)?;
            graph.mean(l)
        }
        GeneratorLoss::NonSaturating => {
            let l = log_clamped(graph, d_out)?;
            let m = graph.mean(l);
            graph.scale(m, -1.0)
        }
    })
}

/// Gradient, with respect to the generator parameters, of the mean classifier
/// loss on `G(z, y)` labelled `y`.
///
/// With `reversal = Some(λ)` the samples pass through a gradient reversal gate
/// first, giving `-λ ∇L_C`; with `None` the plain `∇L_C` an auxiliary-classifier
/// generator descends.
pub fn classifier_path_gradient(
    generator: &Network,
    classifier: &Classifier,
    z: &Array,
    labels: &[usize],
    reversal: Option<f64>,
) -> Result<ParameterStore> {
    let mut graph = Graph::new();
    let zv = graph.leaf(z.clone());
    let (x, bound) = generator.forward(&mut graph, zv, Some(labels))?;
    let x = match reversal {
        Some(lambda) => graph.gradient_reversal(x, lambda)?,
        None => x,
    };
    let (out, _) = classifier.forward(&mut graph, x)?;
    let loss = classifier.loss.apply(&mut graph, out, labels)?;
    graph.backward(loss)?;
    Ok(bound.gradients(&graph))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Player {
    Discriminator,
    Generator,
    Classifier,
}

/// Losses and schedule values of one game iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationTrace {
    pub iteration: usize,
    pub progress: f64,
    pub lambda: f64,
    pub gan_lr: f64,
    pub classifier_lr: f64,
    pub discriminator_objective: f64,
    pub generator_gan_loss: f64,
    pub generator_class_loss: f64,
    pub classifier_loss: Option<f64>,
}

/// Parameters and optimizer state of all players.
///
/// Each player draws its batches from its own random stream, so the
/// discriminator and generator see the same randomness whether or not a
/// classifier takes part.
#[derive(Clone, Debug)]
pub struct GameState {
    pub config: GameConfig,
    pub generator: Network,
    pub discriminator: Network,
    pub classifier: Option<Classifier>,
    initial_generator: Network,
    pub opt_g: AdamState,
    pub opt_d: AdamState,
    pub opt_c: Option<AdamState>,
    pub iteration: usize,
    /// Every update applied so far, in order.
    pub updates: Vec<Player>,
    rng_d: Rng,
    rng_g: Rng,
    rng_c: Rng,
}

impl GameState {
    /// Snapshots `generator` as the frozen initial generator.
    pub fn new(
        config: GameConfig,
        generator: Network,
        discriminator: Network,
        classifier: Option<Classifier>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if generator.spec != config.generator_spec()? {
            return Err(Error::InvalidSpec(
                "generator does not match the config".into(),
            ));
        }
        if discriminator.spec != config.discriminator_spec()? {
            return Err(Error::InvalidSpec(
                "discriminator does not match the config".into(),
            ));
        }
        let opt_g = AdamState::new(config.gan_adam, &generator.params);
        let opt_d = AdamState::new(config.gan_adam, &discriminator.params);
        let opt_c = classifier
            .as_ref()
            .map(|c| AdamState::new(config.classifier_adam, &c.flat_params()));
        Ok(Self {
            initial_generator: generator.clone(),
            generator,
            discriminator,
            classifier,
            opt_g,
            opt_d,
            opt_c,
            iteration: 0,
            updates: Vec::new(),
            rng_d: rng(derive_seed(seed, "stream.discriminator")),
            rng_g: rng(derive_seed(seed, "stream.generator")),
            rng_c: rng(derive_seed(seed, "stream.classifier")),
            config,
        })
    }

    pub fn initial_generator(&self) -> &Network {
        &self.initial_generator
    }

    fn diverged(&self, what: &'static str, value: f64) -> Error {
        Error::Diverged {
            what,
            iteration: self.iteration,
            detail: format!("loss = {value}"),
        }
    }

    /// Real and generated batches of size `m` for the next discriminator step.
    pub fn sample_discriminator_batches(
        &mut self,
        data: &[LabeledSample],
    ) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>)> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("empty training data".into()));
        }
        let m = self.config.batch_size;
        let real = sample_real(data, m, &mut self.rng_d);
        let fake = sample_generator(
            &self.generator,
            self.config.latent_dim,
            self.config.num_classes,
            m,
            &mut self.rng_d,
        )?;
        Ok((real, fake))
    }

    /// Ascends `mean log D(x, y) + mean log(1 - D(x_g, y_g))` by one step and
    /// returns the objective before the step.
    ///
    /// The fake batch enters as plain values, so nothing reaches the generator.
    pub fn discriminator_step(
        &mut self,
        real: &[LabeledSample],
        fake: &[LabeledSample],
        lr: f64,
    ) -> Result<f64> {
        let m = self.config.batch_size;
        if real.len() != m || fake.len() != m {
            return Err(Error::InvalidArgument(format!(
                "discriminator batches must have size {m}, got {} real and {} fake",
                real.len(),
                fake.len()
            )));
        }
        let (xr, yr) = to_batch(real)?;
        let (xf, yf) = to_batch(fake)?;
        let mut graph = Graph::new();
        let bound = self.discriminator.params.bind(&mut graph);
        let spec = &self.discriminator.spec;

        let xr = graph.leaf(xr);
        let d_real = crate::nn::mlp_forward(&mut graph, spec, &bound, xr, Some(&yr))?;
        let log_real = log_clamped(&mut graph, d_real)?;
        let real_term = graph.mean(log_real);

        let xf = graph.leaf(xf);
        let d_fake = crate::nn::mlp_forward(&mut graph, spec, &bound, xf, Some(&yf))?;
        let one_minus_fake = one_minus(&mut graph, d_fake)?;
        let log_fake = log_clamped(&mut graph, one_minus_fake)?;
        let fake_term = graph.mean(log_fake);

        let objective = graph.add(real_term, fake_term)?;
        let value = graph.value(objective).item();
        if !value.is_finite() {
            return Err(self.diverged("discriminator", value));
        }
        let loss = graph.scale(objective, -1.0);
        graph.backward(loss)?;
        let grads = bound.gradients(&graph);
        adam_step(
            &mut self.discriminator.params,
            &grads,
            &mut self.opt_d,
            lr,
            0.0,
        )?;
        self.updates.push(Player::Discriminator);
        Ok(value)
    }

    fn generator_update(&mut self, reversal: Option<f64>, lr: f64) -> Result<(f64, f64)> {
        let m = self.config.batch_size;
        let (z, labels) = draw_latent(
            &mut self.rng_g,
            m,
            self.config.latent_dim,
            self.config.num_classes,
        );
        let mut graph = Graph::new();
        let zv = graph.leaf(z);
        let (x, bound) = self.generator.forward(&mut graph, zv, Some(&labels))?;
        let (d, _) = self.discriminator.forward(&mut graph, x, Some(&labels))?;
        let gan = gan_generator_term(&mut graph, d, self.config.generator_loss)?;
        let gan_value = graph.value(gan).item();

        let (root, class_value) = match reversal {
            None => (gan, 0.0),
            Some(lambda) => {
                let classifier = self
                    .classifier
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("the game has no classifier".into()))?;
                let gated = graph.gradient_reversal(x, lambda)?;
                let (out, _) = classifier.forward(&mut graph, gated)?;
                let lc = classifier.loss.apply(&mut graph, out, &labels)?;
                let value = graph.value(lc).item();
                (graph.add(gan, lc)?, value)
            }
        };
        if !gan_value.is_finite() || !class_value.is_finite() {
            return Err(self.diverged("generator", gan_value + class_value));
        }
        graph.backward(root)?;
        let grads = bound.gradients(&graph);
        adam_step(&mut self.generator.params, &grads, &mut self.opt_g, lr, 0.0)?;
        self.updates.push(Player::Generator);
        Ok((gan_value, class_value))
    }

    /// Descends `GAN term − λ · mean L_C(C(G(z, y)), y)` on a fresh latent batch.
    ///
    /// The classifier loss reaches the generator through a gradient reversal
    /// gate of strength `lambda`. Returns `(GAN term, classifier loss)`.
    pub fn generator_step(&mut self, lambda: f64, lr: f64) -> Result<(f64, f64)> {
        if !(lambda >= 0.0) {
            return Err(Error::NegativeLambda(lambda));
        }
        self.generator_update(Some(lambda), lr)
    }

    /// Plain conditional-GAN generator step (no classifier involved).
    pub fn cgan_generator_step(&mut self, lr: f64) -> Result<f64> {
        Ok(self.generator_update(None, lr)?.0)
    }

    /// Builds the mixed classifier batch of size `m` from real data, the
    /// initial generator and the current generator, per the configured plan.
    pub fn sample_classifier_batch(
        &mut self,
        data: &[LabeledSample],
    ) -> Result<Vec<LabeledSample>> {
        if data.is_empty() && self.config.plan.real > 0.0 {
            return Err(Error::InvalidArgument(
                "empty real data for the classifier".into(),
            ));
        }
        let [n_real, n_initial, n_current] = self.config.plan.counts(self.config.batch_size);
        let (latent, classes) = (self.config.latent_dim, self.config.num_classes);
        let mut batch = sample_real(data, n_real, &mut self.rng_c);
        batch.extend(sample_generator(
            &self.initial_generator,
            latent,
            classes,
            n_initial,
            &mut self.rng_c,
        )?);
        batch.extend(sample_generator(
            &self.generator,
            latent,
            classes,
            n_current,
            &mut self.rng_c,
        )?);
        Ok(batch)
    }

    /// One descent step of the classifier on a mixed batch; returns the loss
    /// before the step.
    pub fn classifier_step(&mut self, data: &[LabeledSample], lr: f64) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidArgument(
                "empty real data for the classifier".into(),
            ));
        }
        let batch = self.sample_classifier_batch(data)?;
        let (x, labels) = to_batch(&batch)?;
        let weight_decay = self.config.weight_decay;
        let iteration = self.iteration;
        let (classifier, opt) = match (self.classifier.as_mut(), self.opt_c.as_mut()) {
            (Some(c), Some(o)) => (c, o),
            _ => return Err(Error::InvalidArgument("the game has no classifier".into())),
        };
        let value = descend_classifier(classifier, opt, &x, &labels, lr, weight_decay).map_err(
            |e| match e {
                Error::Diverged { detail, .. } => Error::Diverged {
                    what: "classifier",
                    iteration,
                    detail,
                },
                other => other,
            },
        )?;
        self.updates.push(Player::Classifier);
        Ok(value)
    }

    /// One iteration of the three-player loop with the schedules evaluated at
    /// `iteration / (total - 1)`.
    pub fn play_iteration(
        &mut self,
        data: &[LabeledSample],
        total: usize,
    ) -> Result<IterationTrace> {
        let p = progress(self.iteration, total);
        let schedule = self.config.schedule()?.at(p)?;
        let lambda = lambda_schedule(&schedule);
        let gan_lr = self.config.gan_lr * lr_schedule(&schedule);
        let classifier_lr = self.config.classifier_lr * lr_schedule(&schedule);

        let (real, fake) = self.sample_discriminator_batches(data)?;
        let d_obj = self.discriminator_step(&real, &fake, gan_lr)?;
        let (g_gan, g_cls) = self.generator_step(lambda, gan_lr)?;
        let c_loss = if self.config.freeze_classifier {
            None
        } else {
            Some(self.classifier_step(data, classifier_lr)?)
        };
        let trace = IterationTrace {
            iteration: self.iteration,
            progress: p,
            lambda,
            gan_lr,
            classifier_lr,
            discriminator_objective: d_obj,
            generator_gan_loss: g_gan,
            generator_class_loss: g_cls,
            classifier_loss: c_loss,
        };
        self.iteration += 1;
        Ok(trace)
    }
}

/// Single Adam step of `classifier` on `(x, labels)`; returns the loss before.
pub(crate) fn descend_classifier(
    classifier: &mut Classifier,
    opt: &mut AdamState,
    x: &Array,
    labels: &[usize],
    lr: f64,
    weight_decay: f64,
) -> Result<f64> {
    let mut graph = Graph::new();
    let input = graph.leaf(x.clone());
    let (out, binding) = classifier.forward(&mut graph, input)?;
    let loss = classifier.loss.apply(&mut graph, out, labels)?;
    let value = graph.value(loss).item();
    if !value.is_finite() {
        return Err(Error::Diverged {
            what: "classifier",
            iteration: 0,
            detail: format!("loss = {value}"),
        });
    }
    graph.backward(loss)?;
    let grads = binding.gradients(&graph);
    let mut params = classifier.flat_params();
    adam_step(&mut params, &grads, opt, lr, weight_decay)?;
    classifier.load_flat_params(&params)?;
    Ok(value)
}
