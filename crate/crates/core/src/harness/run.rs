//! Scenario execution and the run report.
//!
//! Every scenario of one run shares the training set, the held-out test set
//! and the classifier initialization. Seeds are derived from the run seed by
//! tag, so adding or removing a scenario leaves the others unchanged.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::games::{
    sample_generator, train_acgan, train_cgan, train_classifier, train_three_player_with,
    CganOutcome, Classifier, ClassifierLoss, IterationTrace, LabeledSample,
};
use crate::harness::checkpoint::{load_checkpoint, save_checkpoint};
use crate::harness::config::{DatasetSource, ExperimentConfig, Scenario};
use crate::harness::dataset::{align_labels, load_dataset_csv, save_dataset_csv, Dataset};
use crate::harness::ppm::{write_raster_ppm, Palette};
use crate::nn::{Activation, Head, MlpSpec, Network, ParameterStore};
use crate::seed::{derive_seed, rng, RNG_ALGORITHM};
use crate::toy::{
    boundary_angle, overlap_score, points_of, rasterize_surface, sample_mixture, GaussianClassSpec,
    RasterBounds,
};

/// Training and held-out data of a run.
#[derive(Clone, Debug)]
pub struct RunData {
    pub train: Dataset,
    pub test: Vec<LabeledSample>,
    /// Generating spec for toy datasets.
    pub spec: Option<GaussianClassSpec>,
}

/// Toy data comes from the spec with two disjoint seed streams; file data is
/// read from disk.
pub fn load_run_data(config: &ExperimentConfig) -> Result<RunData> {
    match &config.dataset {
        DatasetSource::File { train, test } => {
            let train = load_dataset_csv(train)?;
            let test = align_labels(&train, load_dataset_csv(test)?)?;
            Ok(RunData {
                train,
                test,
                spec: None,
            })
        }
        toy => {
            let spec = toy.toy_spec().expect("toy dataset");
            let train = sample_mixture(
                &spec,
                config.samples_per_class,
                derive_seed(config.seed, "data.train"),
            );
            let test = sample_mixture(
                &spec,
                config.test_per_class,
                derive_seed(config.seed, "data.test"),
            );
            Ok(RunData {
                train: Dataset::from_samples(train),
                test,
                spec: Some(spec),
            })
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScenarioMetrics {
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    /// Linear two-dimensional classifiers on toy data only.
    pub boundary_angle: Option<f64>,
    /// `overlap_score` of samples from the scenario's final generator.
    pub overlap_score: Option<f64>,
    /// The same measurement for the pretrained conditional GAN.
    pub reference_overlap_score: Option<f64>,
    /// Largest distance between a generated class mean and the true mean.
    pub mean_error: Option<f64>,
    pub classifier_losses: Vec<f64>,
    pub cgan_trace: Vec<(f64, f64)>,
    pub game_trace: Vec<IterationTrace>,
    /// `(iterations played, overlap_score)` during a game.
    pub overlap_trace: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    /// Error text for scenarios that aborted.
    pub outcome: std::result::Result<ScenarioMetrics, String>,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub seed: u64,
    pub rng_algorithm: &'static str,
    pub config_echo: String,
    pub results: Vec<ScenarioResult>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

impl RunReport {
    pub fn all_completed(&self) -> bool {
        self.results.iter().all(|r| r.outcome.is_ok())
    }

    pub fn get(&self, scenario: Scenario) -> Option<&ScenarioMetrics> {
        self.results
            .iter()
            .find(|r| r.scenario == scenario)
            .and_then(|r| r.outcome.as_ref().ok())
    }

    /// One row per scenario. Timing lives in [`RunReport::timing_csv`] so that
    /// this file depends only on config and seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "scenario,status,test_accuracy,train_accuracy,boundary_angle,overlap_score,reference_overlap_score,mean_error\n",
        );
        for r in &self.results {
            match &r.outcome {
                Ok(m) => {
                    let _ = writeln!(
                        out,
                        "{},ok,{:.6},{:.6},{},{},{},{}",
                        r.scenario.name(),
                        m.test_accuracy,
                        m.train_accuracy,
                        opt(m.boundary_angle),
                        opt(m.overlap_score),
                        opt(m.reference_overlap_score),
                        opt(m.mean_error)
                    );
                }
                Err(_) => {
                    let _ = writeln!(out, "{},failed,NA,NA,NA,NA,NA,NA", r.scenario.name());
                }
            }
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("scenario,wall_clock_seconds\n");
        for r in &self.results {
            let _ = writeln!(out, "{},{:.3}", r.scenario.name(), r.wall_clock_seconds);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "rng: {}", self.rng_algorithm);
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>9} {:>9} {:>9} {:>9}",
            "scenario", "test acc", "angle", "overlap", "ref ovl", "mean err"
        );
        for r in &self.results {
            match &r.outcome {
                Ok(m) => {
                    let _ = writeln!(
                        out,
                        "{:<24} {:>8.4} {:>9} {:>9} {:>9} {:>9}",
                        r.scenario.name(),
                        m.test_accuracy,
                        m.boundary_angle.map_or("-".into(), |v| format!("{v:.2}")),
                        m.overlap_score.map_or("-".into(), |v| format!("{v:.4}")),
                        m.reference_overlap_score
                            .map_or("-".into(), |v| format!("{v:.4}")),
                        m.mean_error.map_or("-".into(), |v| format!("{v:.4}")),
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{:<24} FAILED: {e}", r.scenario.name());
                }
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "config:");
        out.push_str(&self.config_echo);
        out
    }

    /// `report.csv`, `report.txt`, `timing.csv` and `config.txt` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.to_csv())?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("timing.csv"), self.timing_csv())?;
        std::fs::write(dir.join("config.txt"), &self.config_echo)?;
        Ok(())
    }
}

/// Rebuilds a classifier from the parameters of [`Classifier::flat_params`].
/// Layer widths come from the stored shapes; a single output means hinge.
pub fn classifier_from_params(flat: &ParameterStore) -> Result<Classifier> {
    fn network(params: ParameterStore, head: Head) -> Result<Network> {
        let mut sizes = Vec::new();
        let mut k = 0;
        while let Ok(w) = params.get(&crate::nn::weight_name(k)) {
            if w.shape().len() != 2 {
                return Err(Error::InvalidSpec(format!(
                    "layer {k} weight has shape {:?}",
                    w.shape()
                )));
            }
            if k == 0 {
                sizes.push(w.shape()[0]);
            }
            sizes.push(w.shape()[1]);
            k += 1;
        }
        if k == 0 {
            return Err(Error::MissingParameter(crate::nn::weight_name(0)));
        }
        Network::new(MlpSpec::new(sizes, Activation::Relu, head)?, params)
    }
    let head = network(flat.extract("head"), Head::Linear)?;
    let trunk_params = flat.extract("trunk");
    let trunk = if trunk_params.is_empty() {
        None
    } else {
        Some(network(trunk_params, Head::None)?)
    };
    let loss = if head.spec.output_width() == 1 {
        ClassifierLoss::Hinge
    } else {
        ClassifierLoss::CrossEntropy
    };
    if flat.len() != head.params.len() + trunk.as_ref().map_or(0, |t| t.params.len()) {
        return Err(Error::InvalidSpec(
            "classifier checkpoint holds arrays outside head. and trunk.".into(),
        ));
    }
    Classifier::with_trunk(trunk, head, loss)
}

pub fn load_classifier(path: &Path) -> Result<Classifier> {
    classifier_from_params(&load_checkpoint(path)?)
}

pub fn raster_bounds(config: &ExperimentConfig) -> RasterBounds {
    RasterBounds::square(config.raster_min, config.raster_max)
}

pub fn render_classifier(
    classifier: &Classifier,
    config: &ExperimentConfig,
) -> Result<crate::toy::SurfaceRaster> {
    rasterize_surface(
        |p| classifier.classify_point(&p),
        raster_bounds(config),
        config.raster_resolution,
    )
}

fn class_mean_error(samples: &[LabeledSample], spec: &GaussianClassSpec) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (k, class) in spec.classes().iter().enumerate() {
        let members: Vec<&LabeledSample> = samples.iter().filter(|s| s.label == k).collect();
        if members.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no generated samples of class {k}"
            )));
        }
        let n = members.len() as f64;
        let mx = members.iter().map(|s| s.features[0]).sum::<f64>() / n;
        let my = members.iter().map(|s| s.features[1]).sum::<f64>() / n;
        worst = worst.max((mx - class.mean[0]).hypot(my - class.mean[1]));
    }
    Ok(worst)
}

/// Shared, lazily trained pieces of one run.
struct Shared<'a> {
    config: &'a ExperimentConfig,
    data: &'a RunData,
    init: Classifier,
    baseline: Option<(Classifier, Vec<f64>)>,
    cgan: Option<CganOutcome>,
}

impl<'a> Shared<'a> {
    fn baseline(&mut self) -> Result<&(Classifier, Vec<f64>)> {
        if self.baseline.is_none() {
            let out = train_classifier(
                &self.config.game,
                &self.data.train.samples,
                None,
                self.init.clone(),
                derive_seed(self.config.seed, "baseline"),
            )?;
            self.baseline = Some((out.classifier, out.loss_trace));
        }
        Ok(self.baseline.as_ref().expect("just set"))
    }

    fn cgan(&mut self, pretrained: Option<&(Network, Network)>) -> Result<&CganOutcome> {
        if self.cgan.is_none() {
            self.cgan = Some(match pretrained {
                Some((g, d)) => CganOutcome {
                    generator: g.clone(),
                    discriminator: d.clone(),
                    trace: Vec::new(),
                },
                None => train_cgan(
                    &self.config.game,
                    &self.data.train.samples,
                    derive_seed(self.config.seed, "cgan"),
                )?,
            });
        }
        Ok(self.cgan.as_ref().expect("just set"))
    }

    /// Samples from `generator` on a stream shared by all scenarios.
    fn generated(&self, generator: &Network) -> Result<Vec<LabeledSample>> {
        let mut stream = rng(derive_seed(self.config.seed, "eval.samples"));
        let g = &self.config.game;
        sample_generator(
            generator,
            g.latent_dim,
            g.num_classes,
            self.config.eval_samples,
            &mut stream,
        )
    }

    fn overlap(&self, samples: &[LabeledSample]) -> Result<Option<f64>> {
        match &self.data.spec {
            Some(spec) if spec.num_classes() == 2 => Ok(Some(overlap_score(
                &points_of(samples)?,
                spec,
                self.config.tau,
            )?)),
            _ => Ok(None),
        }
    }

    fn classifier_metrics(&self, classifier: &Classifier) -> Result<ScenarioMetrics> {
        let angle = match (&self.data.spec, classifier.linear_normal()) {
            (Some(_), Some(w)) => Some(boundary_angle(w)?),
            _ => None,
        };
        Ok(ScenarioMetrics {
            test_accuracy: classifier.accuracy(&self.data.test)?,
            train_accuracy: classifier.accuracy(&self.data.train.samples)?,
            boundary_angle: angle,
            ..ScenarioMetrics::default()
        })
    }

    fn generator_metrics(
        &self,
        m: &mut ScenarioMetrics,
        generator: &Network,
    ) -> Result<Vec<LabeledSample>> {
        let samples = self.generated(generator)?;
        m.overlap_score = self.overlap(&samples)?;
        if let Some(spec) = &self.data.spec {
            m.mean_error = Some(class_mean_error(&samples, spec)?);
        }
        Ok(samples)
    }
}

/// Where a scenario's artifacts go, if anywhere.
struct Artifacts {
    dir: Option<PathBuf>,
    labels: Vec<String>,
}

impl Artifacts {
    fn path(&self, file: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(file))
    }

    fn checkpoint(&self, file: &str, params: &ParameterStore) -> Result<()> {
        if let Some(p) = self.path(file) {
            save_checkpoint(params, &p)?;
        }
        Ok(())
    }

    fn samples(&self, file: &str, samples: &[LabeledSample]) -> Result<()> {
        if let Some(p) = self.path(file) {
            let data = Dataset {
                samples: samples.to_vec(),
                labels: self.labels.clone(),
            };
            save_dataset_csv(&data, &p)?;
        }
        Ok(())
    }

    fn text(&self, file: &str, body: String) -> Result<()> {
        if let Some(p) = self.path(file) {
            std::fs::write(p, body)?;
        }
        Ok(())
    }

    fn surface(
        &self,
        classifier: &Classifier,
        config: &ExperimentConfig,
        data: &RunData,
    ) -> Result<()> {
        if let Some(p) = self.path("surface.ppm") {
            if data.train.feature_dim() == 2 {
                let raster = render_classifier(classifier, config)?;
                write_raster_ppm(&raster, &p, &Palette::default())?;
            }
        }
        Ok(())
    }

    fn traces(&self, m: &ScenarioMetrics) -> Result<()> {
        if !m.classifier_losses.is_empty() {
            let mut s = String::from("iteration,loss\n");
            for (i, l) in m.classifier_losses.iter().enumerate() {
                let _ = writeln!(s, "{i},{l:.16e}");
            }
            self.text("classifier_trace.csv", s)?;
        }
        if !m.cgan_trace.is_empty() {
            let mut s = String::from("iteration,discriminator_objective,generator_loss\n");
            for (i, (d, g)) in m.cgan_trace.iter().enumerate() {
                let _ = writeln!(s, "{i},{d:.16e},{g:.16e}");
            }
            self.text("cgan_trace.csv", s)?;
        }
        if !m.game_trace.is_empty() {
            let mut s = String::from(
                "iteration,progress,lambda,gan_lr,classifier_lr,discriminator_objective,generator_gan_loss,generator_class_loss,classifier_loss\n",
            );
            for t in &m.game_trace {
                let _ = writeln!(
                    s,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                    t.iteration,
                    t.progress,
                    t.lambda,
                    t.gan_lr,
                    t.classifier_lr,
                    t.discriminator_objective,
                    t.generator_gan_loss,
                    t.generator_class_loss,
                    t.classifier_loss
                        .map_or("NA".into(), |v| format!("{v:.16e}"))
                );
            }
            self.text("game_trace.csv", s)?;
        }
        if !m.overlap_trace.is_empty() {
            let mut s = String::from("iteration,overlap_score\n");
            for (i, v) in &m.overlap_trace {
                let _ = writeln!(s, "{i},{v:.16e}");
            }
            self.text("overlap_trace.csv", s)?;
        }
        Ok(())
    }
}

fn run_one(
    scenario: Scenario,
    shared: &mut Shared<'_>,
    pretrained: Option<&(Network, Network)>,
    art: &Artifacts,
) -> Result<ScenarioMetrics> {
    let config = shared.config;
    let game = &config.game;
    let data = &shared.data.train.samples;
    let seed = config.seed;
    match scenario {
        Scenario::Baseline => {
            let (classifier, losses) = shared.baseline()?.clone();
            let mut m = shared.classifier_metrics(&classifier)?;
            m.classifier_losses = losses;
            art.checkpoint("classifier.ckpt", &classifier.flat_params())?;
            art.surface(&classifier, config, shared.data)?;
            Ok(m)
        }
        Scenario::Cgan | Scenario::CganAugmented => {
            let cgan = shared.cgan(pretrained)?.clone();
            let fraction = if scenario == Scenario::Cgan {
                1.0
            } else {
                game.augment_fraction
            };
            let tag = if scenario == Scenario::Cgan {
                "cgan.classifier"
            } else {
                "augmented"
            };
            let out = train_classifier(
                game,
                data,
                Some((&cgan.generator, fraction)),
                shared.init.clone(),
                derive_seed(seed, tag),
            )?;
            let mut m = shared.classifier_metrics(&out.classifier)?;
            let samples = shared.generator_metrics(&mut m, &cgan.generator)?;
            m.classifier_losses = out.loss_trace;
            m.cgan_trace = cgan.trace.clone();
            art.checkpoint("generator.ckpt", &cgan.generator.params)?;
            art.checkpoint("discriminator.ckpt", &cgan.discriminator.params)?;
            art.checkpoint("classifier.ckpt", &out.classifier.flat_params())?;
            art.samples("samples.csv", &samples)?;
            art.surface(&out.classifier, config, shared.data)?;
            Ok(m)
        }
        Scenario::Acgan => {
            let out = train_acgan(game, data, derive_seed(seed, "acgan"))?;
            let mut m = shared.classifier_metrics(&out.classifier)?;
            let samples = shared.generator_metrics(&mut m, &out.generator)?;
            m.cgan_trace = out.trace;
            art.checkpoint("generator.ckpt", &out.generator.params)?;
            art.checkpoint("discriminator.ckpt", &out.discriminator.flat_params())?;
            art.checkpoint("classifier.ckpt", &out.classifier.flat_params())?;
            art.samples("samples.csv", &samples)?;
            art.surface(&out.classifier, config, shared.data)?;
            Ok(m)
        }
        Scenario::ThreePlayer | Scenario::FrozenClassifierGame => {
            let frozen = scenario == Scenario::FrozenClassifierGame;
            let classifier = if frozen {
                shared.baseline()?.0.clone()
            } else {
                shared.init.clone()
            };
            let cgan = shared.cgan(pretrained)?.clone();
            let mut game_config = game.clone();
            game_config.freeze_classifier = frozen;
            let mut overlap_trace = Vec::new();
            let every = config.trace_every;
            let measure = every > 0 && shared.data.spec.is_some();
            let shared_ref = &*shared;
            let out = train_three_player_with(
                &game_config,
                data,
                Some((&cgan.generator, &cgan.discriminator)),
                classifier,
                derive_seed(seed, scenario.name()),
                |state| {
                    if measure && state.iteration % every == 0 {
                        let samples = shared_ref.generated(&state.generator)?;
                        if let Some(score) = shared_ref.overlap(&samples)? {
                            overlap_trace.push((state.iteration, score));
                        }
                    }
                    Ok(())
                },
            )?;
            let mut m = shared.classifier_metrics(&out.classifier)?;
            let samples = shared.generator_metrics(&mut m, &out.generator)?;
            let reference = shared.generated(&cgan.generator)?;
            m.reference_overlap_score = shared.overlap(&reference)?;
            m.game_trace = out.trace;
            m.overlap_trace = overlap_trace;
            art.checkpoint("generator.ckpt", &out.generator.params)?;
            art.checkpoint("discriminator.ckpt", &out.discriminator.params)?;
            art.checkpoint("initial_generator.ckpt", &out.initial_generator.params)?;
            art.checkpoint("classifier.ckpt", &out.classifier.flat_params())?;
            art.samples("samples.csv", &samples)?;
            art.samples("reference_samples.csv", &reference)?;
            art.surface(&out.classifier, config, shared.data)?;
            Ok(m)
        }
    }
}

/// Runs `scenarios` on the data of `config`. Games and augmentation start
/// from the configured pretrained checkpoints when given, and from a freshly
/// trained conditional GAN otherwise.
///
/// A scenario that fails is marked in the report and the others still run.
/// With `out = Some(dir)`, the report, datasets and per-scenario checkpoints,
/// samples, traces and surfaces are written below `dir`.
pub fn run_scenarios_with(
    config: &ExperimentConfig,
    scenarios: &[Scenario],
    out: Option<&Path>,
) -> Result<RunReport> {
    config.validate()?;
    let data = load_run_data(config)?;
    let mut config = config.clone();
    config.game.num_classes = data.train.num_classes();
    config.game.feature_dim = data.train.feature_dim();
    config.game.validate()?;
    let pretrained = match &config.pretrained {
        Some((g, d)) => Some((
            Network::new(config.game.generator_spec()?, load_checkpoint(g)?)?,
            Network::new(config.game.discriminator_spec()?, load_checkpoint(d)?)?,
        )),
        None => None,
    };
    let init = config
        .game
        .init_classifier(derive_seed(config.seed, "classifier"))?;

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        save_dataset_csv(&data.train, &dir.join("train.csv"))?;
        let test = Dataset {
            samples: data.test.clone(),
            labels: data.train.labels.clone(),
        };
        save_dataset_csv(&test, &dir.join("test.csv"))?;
        std::fs::write(dir.join("config.txt"), config.echo())?;
    }

    let mut shared = Shared {
        config: &config,
        data: &data,
        init,
        baseline: None,
        cgan: None,
    };
    let mut done = BTreeSet::new();
    let mut results = Vec::new();
    for &scenario in scenarios {
        if !done.insert(scenario) {
            continue;
        }
        let art = Artifacts {
            dir: out.map(|d| d.join(scenario.name())),
            labels: data.train.labels.clone(),
        };
        let start = Instant::now();
        let outcome = (|| {
            if let Some(d) = &art.dir {
                std::fs::create_dir_all(d)?;
            }
            let m = run_one(scenario, &mut shared, pretrained.as_ref(), &art)?;
            art.traces(&m)?;
            Ok::<_, Error>(m)
        })()
        .map_err(|e| e.to_string());
        results.push(ScenarioResult {
            scenario,
            outcome,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        });
    }
    let report = RunReport {
        seed: config.seed,
        rng_algorithm: RNG_ALGORITHM,
        config_echo: config.echo(),
        results,
    };
    if let Some(dir) = out {
        report.write(dir)?;
    }
    Ok(report)
}

/// [`run_scenarios_with`] for the scenarios listed in the config.
pub fn run_scenarios(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    run_scenarios_with(config, &config.scenarios, out)
}

/// Accuracy and boundary angle of the comparison scenarios, closed by the
/// ordering claim the comparison checks.
pub fn comparison_table(report: &RunReport) -> String {
    let mut out = String::from("method          test accuracy   boundary angle\n");
    for s in Scenario::COMPARISON {
        match report.get(s) {
            Some(m) => out.push_str(&format!(
                "{:<15} {:>13.4}   {:>14}\n",
                s.name(),
                m.test_accuracy,
                m.boundary_angle.map_or("-".into(), |a| format!("{a:.2}"))
            )),
            None => out.push_str(&format!(
                "{:<15} {:>13}   {:>14}\n",
                s.name(),
                "failed",
                "-"
            )),
        }
    }
    if let (Some(b), Some(t)) = (
        report.get(Scenario::Baseline),
        report.get(Scenario::ThreePlayer),
    ) {
        let holds = t.test_accuracy >= b.test_accuracy - 0.01;
        out.push_str(&format!(
            "three-player accuracy >= baseline - 0.01: {}\n",
            if holds { "yes" } else { "no" }
        ));
    }
    out
}
