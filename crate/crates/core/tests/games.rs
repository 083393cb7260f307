use proptest::prelude::*;
use threeplayer::games::{
    classifier_path_gradient, continue_cgan, draw_latent, train_acgan, train_cgan,
    train_three_player, BatchPlan, ClassifierLoss, GameConfig, GameState, GeneratorLoss,
    LabeledSample, Player,
};
use threeplayer::nn::{lambda_schedule, lr_schedule, progress, ParameterStore};
use threeplayer::seed::rng;
use threeplayer::toy::{sample_mixture, GaussianClassSpec};
use threeplayer::Error;

fn small_config() -> GameConfig {
    GameConfig {
        latent_dim: 4,
        generator_hidden: vec![8],
        discriminator_hidden: vec![8],
        batch_size: 12,
        cgan_iterations: 20,
        game_iterations: 15,
        classifier_iterations: 20,
        ..GameConfig::default()
    }
}

fn data() -> Vec<LabeledSample> {
    sample_mixture(&GaussianClassSpec::separable(), 10, 3)
}

fn state(config: GameConfig, seed: u64) -> GameState {
    let g = config.init_generator(seed).unwrap();
    let d = config.init_discriminator(seed + 1).unwrap();
    let c = config.init_classifier(seed + 2).unwrap();
    GameState::new(config, g, d, Some(c), seed).unwrap()
}

struct Snapshot {
    g: ParameterStore,
    d: ParameterStore,
    c: ParameterStore,
    g0: ParameterStore,
}

fn snapshot(s: &GameState) -> Snapshot {
    Snapshot {
        g: s.generator.params.clone(),
        d: s.discriminator.params.clone(),
        c: s.classifier.as_ref().unwrap().flat_params(),
        g0: s.initial_generator().params.clone(),
    }
}

/// Which players' parameters differ between two snapshots, as (G, D, C).
fn changed(a: &Snapshot, b: &Snapshot) -> (bool, bool, bool) {
    assert!(a.g0.bit_eq(&b.g0), "the initial generator must never move");
    (!a.g.bit_eq(&b.g), !a.d.bit_eq(&b.d), !a.c.bit_eq(&b.c))
}

#[test]
fn each_step_moves_only_its_player() {
    let data = data();
    let mut s = state(small_config(), 5);
    // warm up so that every optimizer has nonzero moments
    for _ in 0..3 {
        s.play_iteration(&data, 10).unwrap();
    }
    let before = snapshot(&s);
    let (real, fake) = s.sample_discriminator_batches(&data).unwrap();
    s.discriminator_step(&real, &fake, 1e-3).unwrap();
    let after_d = snapshot(&s);
    assert_eq!(changed(&before, &after_d), (false, true, false));
    s.generator_step(0.3, 1e-3).unwrap();
    let after_g = snapshot(&s);
    assert_eq!(changed(&after_d, &after_g), (true, false, false));
    s.classifier_step(&data, 1e-3).unwrap();
    let after_c = snapshot(&s);
    assert_eq!(changed(&after_g, &after_c), (false, false, true));
}

#[test]
fn iteration_order_is_d_g_c() {
    let data = data();
    let mut s = state(small_config(), 6);
    s.play_iteration(&data, 4).unwrap();
    s.play_iteration(&data, 4).unwrap();
    use Player::*;
    assert_eq!(
        s.updates,
        vec![
            Discriminator,
            Generator,
            Classifier,
            Discriminator,
            Generator,
            Classifier
        ]
    );

    let frozen = GameConfig {
        freeze_classifier: true,
        ..small_config()
    };
    let mut s = state(frozen, 6);
    let before = s.classifier.as_ref().unwrap().flat_params();
    let trace = s.play_iteration(&data, 4).unwrap();
    assert_eq!(s.updates, vec![Discriminator, Generator]);
    assert!(trace.classifier_loss.is_none());
    assert!(s.classifier.as_ref().unwrap().flat_params().bit_eq(&before));
}

#[test]
fn zero_lambda_step_is_the_cgan_step() {
    let data = data();
    let mut a = state(small_config(), 7);
    for _ in 0..2 {
        a.play_iteration(&data, 10).unwrap();
    }
    let mut b = a.clone();
    let (gan_a, class_a) = a.generator_step(0.0, 1e-3).unwrap();
    let gan_b = b.cgan_generator_step(1e-3).unwrap();
    assert_eq!(gan_a.to_bits(), gan_b.to_bits());
    assert!(class_a.is_finite());
    assert!(a.generator.params.bit_eq(&b.generator.params));
    assert!(a.opt_g.m.bit_eq(&b.opt_g.m) && a.opt_g.v.bit_eq(&b.opt_g.v));
}

#[test]
fn negative_lambda_rejected() {
    let mut s = state(small_config(), 8);
    assert!(matches!(
        s.generator_step(-0.1, 1e-3),
        Err(Error::NegativeLambda(_))
    ));
}

#[test]
fn zero_weight_game_leaves_the_gan_untouched_by_the_classifier() {
    // with w_c = 0 the generator and discriminator follow exactly the
    // conditional-GAN updates at the scheduled learning rate
    let data = data();
    let config = GameConfig {
        w_c: 0.0,
        ..small_config()
    };
    let total = 12;
    let mut game = state(config.clone(), 9);
    let mut plain = game.clone();
    let schedule = config.schedule().unwrap();
    for i in 0..total {
        let t = game.play_iteration(&data, total).unwrap();
        assert_eq!(t.lambda, 0.0);
        let s = schedule.at(progress(i, total)).unwrap();
        assert_eq!(lambda_schedule(&s), 0.0);
        let lr = config.gan_lr * lr_schedule(&s);
        let (real, fake) = plain.sample_discriminator_batches(&data).unwrap();
        plain.discriminator_step(&real, &fake, lr).unwrap();
        plain.cgan_generator_step(lr).unwrap();
    }
    assert!(game.generator.params.bit_eq(&plain.generator.params));
    assert!(game
        .discriminator
        .params
        .bit_eq(&plain.discriminator.params));
}

#[test]
fn cgan_continuation_is_deterministic() {
    let data = data();
    let config = small_config();
    let g = config.init_generator(1).unwrap();
    let d = config.init_discriminator(2).unwrap();
    let a = continue_cgan(&config, &data, g.clone(), d.clone(), 10).unwrap();
    let again = continue_cgan(&config, &data, g, d, 10).unwrap();
    assert!(a.generator.params.bit_eq(&again.generator.params));
    assert_eq!(a.trace.len(), config.cgan_iterations);
}

#[test]
fn reversal_path_is_linear_in_lambda() {
    let config = small_config();
    let g = config.init_generator(1).unwrap();
    let c = config.init_classifier(2).unwrap();
    let (z, labels) = draw_latent(&mut rng(3), 16, config.latent_dim, 2);
    let one = classifier_path_gradient(&g, &c, &z, &labels, Some(0.05)).unwrap();
    let two = classifier_path_gradient(&g, &c, &z, &labels, Some(0.1)).unwrap();
    let plain = classifier_path_gradient(&g, &c, &z, &labels, None).unwrap();
    let mut nonzero = 0;
    for (name, a) in one.iter() {
        for ((x, y), p) in a
            .data()
            .iter()
            .zip(two.get(name).unwrap().data())
            .zip(plain.get(name).unwrap().data())
        {
            if x.abs() > 1e-12 {
                nonzero += 1;
                assert!((y / x - 2.0).abs() < 1e-9, "{name}: {y} / {x}");
                // the auxiliary-classifier generator descends the loss itself
                assert!(
                    (p * -0.05 - x).abs() <= 1e-12 * x.abs().max(1e-300),
                    "{name}"
                );
            }
        }
    }
    assert!(nonzero > 0);
    let zero = classifier_path_gradient(&g, &c, &z, &labels, Some(0.0)).unwrap();
    assert!(zero.iter().all(|(_, a)| a.data().iter().all(|v| *v == 0.0)));
}

#[test]
fn game_is_deterministic() {
    let data = data();
    let config = small_config();
    let cgan = train_cgan(&config, &data, 4).unwrap();
    let run = || {
        train_three_player(
            &config,
            &data,
            Some((&cgan.generator, &cgan.discriminator)),
            config.init_classifier(5).unwrap(),
            6,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert!(a.generator.params.bit_eq(&b.generator.params));
    assert!(a.discriminator.params.bit_eq(&b.discriminator.params));
    assert!(a
        .classifier
        .flat_params()
        .bit_eq(&b.classifier.flat_params()));
    assert_eq!(a.trace, b.trace);
    assert!(a.initial_generator.params.bit_eq(&cgan.generator.params));
    let other = train_three_player(
        &config,
        &data,
        Some((&cgan.generator, &cgan.discriminator)),
        config.init_classifier(5).unwrap(),
        7,
    )
    .unwrap();
    assert!(!other.generator.params.bit_eq(&a.generator.params));
}

#[test]
fn game_needs_a_pretrained_pair() {
    let config = small_config();
    let c = config.init_classifier(1).unwrap();
    assert!(train_three_player(&config, &data(), None, c, 1).is_err());
}

#[test]
fn lambda_trace_follows_the_ramp() {
    let data = data();
    let config = small_config();
    let cgan = train_cgan(&config, &data, 4).unwrap();
    let out = train_three_player(
        &config,
        &data,
        Some((&cgan.generator, &cgan.discriminator)),
        config.init_classifier(5).unwrap(),
        6,
    )
    .unwrap();
    let first = out.trace.first().unwrap();
    let last = out.trace.last().unwrap();
    assert_eq!(first.lambda, 0.0);
    assert_eq!(first.gan_lr, config.gan_lr);
    assert_eq!(last.progress, 1.0);
    assert!((last.gan_lr - config.gan_lr / 11f64.powf(0.75)).abs() < 1e-15);
    assert!(out.trace.windows(2).all(|w| w[1].lambda >= w[0].lambda));
}

#[test]
fn classifier_batch_follows_the_plan() {
    let data = data();
    let only_real = GameConfig {
        plan: BatchPlan::new(1.0, 0.0, 0.0).unwrap(),
        ..small_config()
    };
    let mut s = state(only_real, 11);
    let batch = s.sample_classifier_batch(&data).unwrap();
    assert_eq!(batch.len(), 12);
    assert!(batch.iter().all(|b| data.contains(b)));

    let mut s = state(small_config(), 11);
    let batch = s.sample_classifier_batch(&data).unwrap();
    assert_eq!(batch.len(), 12);
    let real = batch.iter().filter(|b| data.contains(b)).count();
    assert_eq!(real, 4);
}

#[test]
fn acgan_runs_and_classifies() {
    let data = data();
    let config = GameConfig {
        classifier_loss: ClassifierLoss::CrossEntropy,
        generator_loss: GeneratorLoss::NonSaturating,
        ..small_config()
    };
    let out = train_acgan(&config, &data, 3).unwrap();
    assert_eq!(out.trace.len(), config.cgan_iterations);
    assert_eq!(out.classifier.num_classes(), 2);
    let again = train_acgan(&config, &data, 3).unwrap();
    assert!(out.generator.params.bit_eq(&again.generator.params));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reversal_linearity_any_lambda(lambda in 1e-3f64..2.0, factor in 0.1f64..10.0, seed in 0u64..1000) {
        let config = small_config();
        let g = config.init_generator(seed).unwrap();
        let c = config.init_classifier(seed + 1).unwrap();
        let (z, labels) = draw_latent(&mut rng(seed + 2), 8, config.latent_dim, 2);
        let a = classifier_path_gradient(&g, &c, &z, &labels, Some(lambda)).unwrap();
        let b = classifier_path_gradient(&g, &c, &z, &labels, Some(lambda * factor)).unwrap();
        for (name, x) in a.iter() {
            for (x, y) in x.data().iter().zip(b.get(name).unwrap().data()) {
                prop_assert!((y - factor * x).abs() <= 1e-9 * (factor * x).abs().max(1e-12));
            }
        }
    }

    #[test]
    fn isolation_holds_for_any_seed(seed in 0u64..10_000) {
        let data = data();
        let mut s = state(small_config(), seed);
        let before = snapshot(&s);
        let (real, fake) = s.sample_discriminator_batches(&data).unwrap();
        s.discriminator_step(&real, &fake, 1e-3).unwrap();
        let d = snapshot(&s);
        prop_assert_eq!(changed(&before, &d), (false, true, false));
        s.generator_step(0.1, 1e-3).unwrap();
        let g = snapshot(&s);
        prop_assert_eq!(changed(&d, &g), (true, false, false));
        s.classifier_step(&data, 1e-3).unwrap();
        prop_assert_eq!(changed(&g, &snapshot(&s)), (false, false, true));
    }
}
