//! Training loops: conditional GAN, the three-player game, the
//! auxiliary-classifier GAN and plain or augmented classifier training.

mod acgan;
mod classifier;
mod sample;
mod state;
mod train;

pub use acgan::{train_acgan, AcganDiscriminator, AcganOutcome};
pub use classifier::{Classifier, ClassifierBinding, ClassifierLoss};
pub use sample::{from_batch, to_batch, BatchPlan, LabeledSample};
pub use state::{
    classifier_path_gradient, draw_latent, sample_generator, sample_real, GameConfig, GameState,
    GeneratorLoss, IterationTrace, Player,
};
pub use train::{
    continue_cgan, train_cgan, train_classifier, train_three_player, train_three_player_with,
    CganOutcome, ClassifierOutcome, ThreePlayerOutcome,
};
