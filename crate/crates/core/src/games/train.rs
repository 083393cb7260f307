use crate::error::{Error, Result};
use crate::games::classifier::Classifier;
use crate::games::sample::{to_batch, LabeledSample};
use crate::games::state::{
    descend_classifier, sample_generator, sample_real, GameConfig, GameState, IterationTrace,
};
use crate::nn::{AdamState, Network};
use crate::seed::{derive_seed, rng};

/// Result of conditional-GAN training.
#[derive(Clone, Debug)]
pub struct CganOutcome {
    pub generator: Network,
    pub discriminator: Network,
    /// `(discriminator objective, generator loss)` per iteration.
    pub trace: Vec<(f64, f64)>,
}

/// Conditional GAN: alternates one discriminator step and one plain generator
/// step for `config.cgan_iterations` iterations at a constant learning rate.
pub fn train_cgan(config: &GameConfig, data: &[LabeledSample], seed: u64) -> Result<CganOutcome> {
    let generator = config.init_generator(seed)?;
    let discriminator = config.init_discriminator(seed)?;
    continue_cgan(config, data, generator, discriminator, seed)
}

/// [`train_cgan`] from given starting networks.
pub fn continue_cgan(
    config: &GameConfig,
    data: &[LabeledSample],
    generator: Network,
    discriminator: Network,
    seed: u64,
) -> Result<CganOutcome> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training data".into()));
    }
    let mut state = GameState::new(
        config.clone(),
        generator,
        discriminator,
        None,
        derive_seed(seed, "cgan"),
    )?;
    let mut trace = Vec::with_capacity(config.cgan_iterations);
    for _ in 0..config.cgan_iterations {
        let (real, fake) = state.sample_discriminator_batches(data)?;
        let d = state.discriminator_step(&real, &fake, config.gan_lr)?;
        let g = state.cgan_generator_step(config.gan_lr)?;
        trace.push((d, g));
        state.iteration += 1;
    }
    Ok(CganOutcome {
        generator: state.generator,
        discriminator: state.discriminator,
        trace,
    })
}

#[derive(Clone, Debug)]
pub struct ThreePlayerOutcome {
    pub generator: Network,
    pub discriminator: Network,
    pub classifier: Classifier,
    pub initial_generator: Network,
    pub trace: Vec<IterationTrace>,
}

/// The three-player game, started from a pretrained conditional GAN.
pub fn train_three_player(
    config: &GameConfig,
    data: &[LabeledSample],
    pretrained: Option<(&Network, &Network)>,
    classifier: Classifier,
    seed: u64,
) -> Result<ThreePlayerOutcome> {
    train_three_player_with(config, data, pretrained, classifier, seed, |_| Ok(()))
}

/// [`train_three_player`] with `observe` called on the state after every
/// iteration.
///
/// Each iteration runs discriminator, generator and classifier updates in
/// that order; the classifier update is skipped when
/// `config.freeze_classifier` is set. Progress runs linearly from 0 to 1 over
/// `config.game_iterations`.
pub fn train_three_player_with<F>(
    config: &GameConfig,
    data: &[LabeledSample],
    pretrained: Option<(&Network, &Network)>,
    classifier: Classifier,
    seed: u64,
    mut observe: F,
) -> Result<ThreePlayerOutcome>
where
    F: FnMut(&GameState) -> Result<()>,
{
    let (generator, discriminator) = pretrained.ok_or_else(|| {
        Error::InvalidArgument(
            "the three-player game starts from a pretrained generator and discriminator".into(),
        )
    })?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training data".into()));
    }
    let mut state = GameState::new(
        config.clone(),
        generator.clone(),
        discriminator.clone(),
        Some(classifier),
        derive_seed(seed, "game"),
    )?;
    let total = config.game_iterations;
    let mut trace = Vec::with_capacity(total);
    for _ in 0..total {
        trace.push(state.play_iteration(data, total)?);
        observe(&state)?;
    }
    let initial_generator = state.initial_generator().clone();
    Ok(ThreePlayerOutcome {
        generator: state.generator,
        discriminator: state.discriminator,
        classifier: state.classifier.expect("game keeps its classifier"),
        initial_generator,
        trace,
    })
}

#[derive(Clone, Debug)]
pub struct ClassifierOutcome {
    pub classifier: Classifier,
    pub loss_trace: Vec<f64>,
    /// `(iteration, accuracy on the real training data)`.
    pub accuracy_trace: Vec<(usize, f64)>,
}

/// Supervised classifier training on batches of size `m`.
///
/// With `augmentation = Some((generator, fraction))`, `round(fraction · m)`
/// samples of every batch come from the generator, labelled by their
/// conditioning class; the rest are drawn from `data`.
pub fn train_classifier(
    config: &GameConfig,
    data: &[LabeledSample],
    augmentation: Option<(&Network, f64)>,
    mut classifier: Classifier,
    seed: u64,
) -> Result<ClassifierOutcome> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty training data".into()));
    }
    if let Some((_, f)) = augmentation {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!(
                "augmentation fraction {f} outside [0, 1]"
            )));
        }
    }
    let m = config.batch_size;
    let n_gen = augmentation.map_or(0, |(_, f)| (f * m as f64).round() as usize);
    let mut stream = rng(derive_seed(seed, "stream.classifier-train"));
    let mut opt = AdamState::new(config.classifier_adam, &classifier.flat_params());
    let iterations = config.classifier_iterations;
    let every = (iterations / 50).max(1);
    let mut loss_trace = Vec::with_capacity(iterations);
    let mut accuracy_trace = Vec::new();
    for it in 0..iterations {
        let mut batch = sample_real(data, m - n_gen, &mut stream);
        if let Some((generator, _)) = augmentation {
            batch.extend(sample_generator(
                generator,
                config.latent_dim,
                config.num_classes,
                n_gen,
                &mut stream,
            )?);
        }
        let (x, labels) = to_batch(&batch)?;
        let loss = descend_classifier(
            &mut classifier,
            &mut opt,
            &x,
            &labels,
            config.classifier_lr,
            config.weight_decay,
        )
        .map_err(|e| match e {
            Error::Diverged { detail, .. } => Error::Diverged {
                what: "classifier",
                iteration: it,
                detail,
            },
            other => other,
        })?;
        loss_trace.push(loss);
        if it % every == every - 1 || it + 1 == iterations {
            accuracy_trace.push((it, classifier.accuracy(data)?));
        }
    }
    Ok(ClassifierOutcome {
        classifier,
        loss_trace,
        accuracy_trace,
    })
}
