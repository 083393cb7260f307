//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments run to the end of the line
//! dataset = separable
//! seed = 7
//! generator_hidden = 32, 32
//! ```
//!
//! Unknown keys, repeated keys, malformed values and missing required keys
//! (`dataset`, `seed`) are rejected with the offending line number. Line 0
//! refers to the document as a whole.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::games::{BatchPlan, ClassifierLoss, GameConfig, GeneratorLoss};
use crate::nn::AdamConfig;
use crate::toy::GaussianClassSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    Baseline,
    Cgan,
    CganAugmented,
    Acgan,
    ThreePlayer,
    FrozenClassifierGame,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Baseline,
        Scenario::Cgan,
        Scenario::CganAugmented,
        Scenario::Acgan,
        Scenario::ThreePlayer,
        Scenario::FrozenClassifierGame,
    ];

    /// The four training schemes of the comparison table.
    pub const COMPARISON: [Scenario; 4] = [
        Scenario::Baseline,
        Scenario::CganAugmented,
        Scenario::Acgan,
        Scenario::ThreePlayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::Cgan => "cgan",
            Scenario::CganAugmented => "cgan-augmented",
            Scenario::Acgan => "acgan",
            Scenario::ThreePlayer => "three-player",
            Scenario::FrozenClassifierGame => "frozen-classifier-game",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    /// Means ±(1, 1), σ = 0.5.
    Separable,
    /// Means ±(1, 1), σ = 1.
    Overlap,
    /// Training and test CSV files.
    File { train: PathBuf, test: PathBuf },
}

impl DatasetSource {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetSource::Separable => "separable",
            DatasetSource::Overlap => "overlap",
            DatasetSource::File { .. } => "file",
        }
    }

    /// The generating spec of a toy dataset.
    pub fn toy_spec(&self) -> Option<GaussianClassSpec> {
        match self {
            DatasetSource::Separable => Some(GaussianClassSpec::separable()),
            DatasetSource::Overlap => Some(GaussianClassSpec::overlap()),
            DatasetSource::File { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Scenarios run by `compare`; the single-scenario commands ignore it.
    pub scenarios: Vec<Scenario>,
    pub dataset: DatasetSource,
    pub samples_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
    /// Network sizes, optimizers, schedules and iteration counts.
    /// `num_classes` and `feature_dim` follow the dataset.
    pub game: GameConfig,
    pub tau: f64,
    /// Generated samples drawn for overlap and fidelity measurements.
    pub eval_samples: usize,
    /// Iterations between overlap measurements during a game; 0 disables.
    pub trace_every: usize,
    pub raster_resolution: usize,
    pub raster_min: f64,
    pub raster_max: f64,
    /// Classifier checkpoint read by `eval` and `render-surface`.
    pub checkpoint: Option<PathBuf>,
    /// `(generator, discriminator)` checkpoints that replace conditional-GAN
    /// pretraining.
    pub pretrained: Option<(PathBuf, PathBuf)>,
}

impl ExperimentConfig {
    /// Defaults for everything except the required keys.
    pub fn new(dataset: DatasetSource, seed: u64) -> Self {
        Self {
            scenarios: Scenario::COMPARISON.to_vec(),
            dataset,
            samples_per_class: 8,
            test_per_class: 1000,
            seed,
            game: GameConfig::default(),
            tau: 0.5,
            eval_samples: 1000,
            trace_every: 50,
            raster_resolution: 200,
            raster_min: -3.0,
            raster_max: 3.0,
            checkpoint: None,
            pretrained: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config { line: 0, msg });
        if self.scenarios.is_empty() {
            return bad("at least one scenario is required".into());
        }
        if self.samples_per_class == 0 || self.test_per_class == 0 || self.eval_samples == 0 {
            return bad("samples_per_class, test_per_class and eval_samples must be > 0".into());
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if self.raster_resolution < 2 {
            return bad(format!(
                "raster_resolution must be >= 2, got {}",
                self.raster_resolution
            ));
        }
        if !(self.raster_min < self.raster_max)
            || !self.raster_min.is_finite()
            || !self.raster_max.is_finite()
        {
            return bad(format!(
                "raster bounds [{}, {}] are empty",
                self.raster_min, self.raster_max
            ));
        }
        self.game.validate().map_err(|e| Error::Config {
            line: 0,
            msg: e.to_string(),
        })
    }

    /// Every effective value as a parseable document.
    pub fn echo(&self) -> String {
        let g = &self.game;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put(
            "scenario",
            self.scenarios
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join(", "),
        );
        put("dataset", self.dataset.name().into());
        if let DatasetSource::File { train, test } = &self.dataset {
            put("dataset_path", train.display().to_string());
            put("test_path", test.display().to_string());
        }
        put("samples_per_class", self.samples_per_class.to_string());
        put("test_per_class", self.test_per_class.to_string());
        put("seed", self.seed.to_string());
        put("latent_dim", g.latent_dim.to_string());
        put("generator_hidden", list(&g.generator_hidden));
        put("discriminator_hidden", list(&g.discriminator_hidden));
        put("classifier_hidden", list(&g.classifier_hidden));
        put("classifier_loss", g.classifier_loss.name().into());
        put("generator_loss", g.generator_loss.name().into());
        put("batch_size", g.batch_size.to_string());
        put("gan_lr", real(g.gan_lr));
        put("gan_beta1", real(g.gan_adam.beta1));
        put("gan_beta2", real(g.gan_adam.beta2));
        put("classifier_lr", real(g.classifier_lr));
        put("classifier_beta1", real(g.classifier_adam.beta1));
        put("classifier_beta2", real(g.classifier_adam.beta2));
        put("adam_eps", real(g.classifier_adam.eps));
        put("weight_decay", real(g.weight_decay));
        put("w_c", real(g.w_c));
        put("alpha", real(g.alpha));
        put("beta", real(g.beta));
        put("plan_real", real(g.plan.real));
        put("plan_initial", real(g.plan.initial));
        put("plan_current", real(g.plan.current));
        put("augment_fraction", real(g.augment_fraction));
        put("cgan_iterations", g.cgan_iterations.to_string());
        put("game_iterations", g.game_iterations.to_string());
        put("classifier_iterations", g.classifier_iterations.to_string());
        put("tau", real(self.tau));
        put("eval_samples", self.eval_samples.to_string());
        put("trace_every", self.trace_every.to_string());
        put("raster_resolution", self.raster_resolution.to_string());
        put("raster_min", real(self.raster_min));
        put("raster_max", real(self.raster_max));
        if let Some(c) = &self.checkpoint {
            put("checkpoint", c.display().to_string());
        }
        if let Some((g, d)) = &self.pretrained {
            put("pretrained_generator", g.display().to_string());
            put("pretrained_discriminator", d.display().to_string());
        }
        out
    }
}

fn list(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Shortest representation that parses back to the same bits.
fn real(v: f64) -> String {
    format!("{v:?}")
}

const KEYS: &[&str] = &[
    "scenario",
    "dataset",
    "dataset_path",
    "test_path",
    "samples_per_class",
    "test_per_class",
    "seed",
    "latent_dim",
    "generator_hidden",
    "discriminator_hidden",
    "classifier_hidden",
    "classifier_loss",
    "generator_loss",
    "batch_size",
    "gan_lr",
    "gan_beta1",
    "gan_beta2",
    "classifier_lr",
    "classifier_beta1",
    "classifier_beta2",
    "adam_eps",
    "weight_decay",
    "w_c",
    "alpha",
    "beta",
    "plan_real",
    "plan_initial",
    "plan_current",
    "augment_fraction",
    "cgan_iterations",
    "game_iterations",
    "classifier_iterations",
    "tau",
    "eval_samples",
    "trace_every",
    "raster_resolution",
    "raster_min",
    "raster_max",
    "checkpoint",
    "pretrained_generator",
    "pretrained_discriminator",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn get<T, F>(&self, key: &str, default: T, parse: F) -> Result<T>
    where
        F: Fn(&str) -> std::result::Result<T, String>,
    {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => parse(v).map_err(|msg| Error::Config {
                line,
                msg: format!("{key}: {msg}"),
            }),
        }
    }

    fn required<T, F>(&self, key: &str, parse: F) -> Result<T>
    where
        F: Fn(&str) -> std::result::Result<T, String>,
    {
        let (line, v) = self.raw(key).ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("missing required key {key}"),
        })?;
        parse(v).map_err(|msg| Error::Config {
            line,
            msg: format!("{key}: {msg}"),
        })
    }
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse()
        .map_err(|_| format!("expected a nonnegative integer, got {v:?}"))
}

fn positive_count(v: &str) -> std::result::Result<usize, String> {
    match count(v)? {
        0 => Err("must be > 0".into()),
        n => Ok(n),
    }
}

fn number(v: &str) -> std::result::Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite number, got {v:?}")),
    }
}

fn nonnegative(v: &str) -> std::result::Result<f64, String> {
    let x = number(v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be >= 0, got {x}"))
    }
}

fn positive(v: &str) -> std::result::Result<f64, String> {
    let x = number(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be > 0, got {x}"))
    }
}

fn unit_interval(v: &str) -> std::result::Result<f64, String> {
    let x = number(v)?;
    if (0.0..1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("must lie in [0, 1), got {x}"))
    }
}

fn sizes(v: &str) -> std::result::Result<Vec<usize>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| positive_count(s.trim())).collect()
}

/// Parses a document; `seed` overrides (or supplies) the `seed` key.
pub fn parse_config(text: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected `key = value`, got {content:?}"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                msg: format!("unknown key {key:?}"),
            });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.trim().to_string())) {
            return Err(Error::Config {
                line,
                msg: format!("{key} already set on line {first}"),
            });
        }
    }
    let e = Entries { map };

    let dataset = match e.required("dataset", |v| Ok(v.to_string()))?.as_str() {
        "separable" => DatasetSource::Separable,
        "overlap" => DatasetSource::Overlap,
        "file" => DatasetSource::File {
            train: e.required("dataset_path", |v| Ok(PathBuf::from(v)))?,
            test: e.required("test_path", |v| Ok(PathBuf::from(v)))?,
        },
        other => {
            let (line, _) = e.raw("dataset").expect("dataset is present");
            return Err(Error::Config {
                line,
                msg: format!("dataset: expected separable, overlap or file, got {other:?}"),
            });
        }
    };
    if !matches!(dataset, DatasetSource::File { .. }) {
        for key in ["dataset_path", "test_path"] {
            if let Some((line, _)) = e.raw(key) {
                return Err(Error::Config {
                    line,
                    msg: format!("{key} is only valid with dataset = file"),
                });
            }
        }
    }
    let seed = match seed {
        Some(s) => s,
        None => e.required("seed", |v| {
            v.parse::<u64>()
                .map_err(|_| format!("expected a u64, got {v:?}"))
        })?,
    };

    let mut c = ExperimentConfig::new(dataset, seed);
    let d = GameConfig::default();
    c.scenarios = e.get("scenario", c.scenarios, |v| {
        let list = v
            .split(',')
            .map(|s| s.trim().parse::<Scenario>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if list.is_empty() {
            return Err("at least one scenario is required".into());
        }
        Ok(list)
    })?;
    c.samples_per_class = e.get("samples_per_class", c.samples_per_class, positive_count)?;
    c.test_per_class = e.get("test_per_class", c.test_per_class, positive_count)?;

    let g = &mut c.game;
    g.latent_dim = e.get("latent_dim", d.latent_dim, positive_count)?;
    g.generator_hidden = e.get("generator_hidden", d.generator_hidden, sizes)?;
    g.discriminator_hidden = e.get("discriminator_hidden", d.discriminator_hidden, sizes)?;
    g.classifier_hidden = e.get("classifier_hidden", d.classifier_hidden, sizes)?;
    g.classifier_loss = e.get("classifier_loss", d.classifier_loss, |v| match v {
        "hinge" => Ok(ClassifierLoss::Hinge),
        "cross-entropy" => Ok(ClassifierLoss::CrossEntropy),
        _ => Err(format!("expected hinge or cross-entropy, got {v:?}")),
    })?;
    g.generator_loss = e.get("generator_loss", d.generator_loss, |v| match v {
        "saturating" => Ok(GeneratorLoss::Saturating),
        "non-saturating" => Ok(GeneratorLoss::NonSaturating),
        _ => Err(format!("expected saturating or non-saturating, got {v:?}")),
    })?;
    g.batch_size = e.get("batch_size", d.batch_size, positive_count)?;
    g.gan_lr = e.get("gan_lr", d.gan_lr, positive)?;
    g.classifier_lr = e.get("classifier_lr", d.classifier_lr, positive)?;
    let eps = e.get("adam_eps", d.classifier_adam.eps, positive)?;
    g.gan_adam = AdamConfig {
        beta1: e.get("gan_beta1", d.gan_adam.beta1, unit_interval)?,
        beta2: e.get("gan_beta2", d.gan_adam.beta2, unit_interval)?,
        eps,
    };
    g.classifier_adam = AdamConfig {
        beta1: e.get("classifier_beta1", d.classifier_adam.beta1, unit_interval)?,
        beta2: e.get("classifier_beta2", d.classifier_adam.beta2, unit_interval)?,
        eps,
    };
    g.weight_decay = e.get("weight_decay", d.weight_decay, nonnegative)?;
    g.w_c = e.get("w_c", d.w_c, nonnegative)?;
    g.alpha = e.get("alpha", d.alpha, positive)?;
    g.beta = e.get("beta", d.beta, positive)?;
    let plan = BatchPlan {
        real: e.get("plan_real", d.plan.real, nonnegative)?,
        initial: e.get("plan_initial", d.plan.initial, nonnegative)?,
        current: e.get("plan_current", d.plan.current, nonnegative)?,
    };
    plan.validate().map_err(|err| Error::Config {
        line: e
            .raw("plan_current")
            .or(e.raw("plan_real"))
            .map_or(0, |(l, _)| l),
        msg: err.to_string(),
    })?;
    g.plan = plan;
    g.augment_fraction = e.get("augment_fraction", d.augment_fraction, |v| {
        let x = number(v)?;
        if (0.0..=1.0).contains(&x) {
            Ok(x)
        } else {
            Err(format!("must lie in [0, 1], got {x}"))
        }
    })?;
    g.cgan_iterations = e.get("cgan_iterations", d.cgan_iterations, count)?;
    g.game_iterations = e.get("game_iterations", d.game_iterations, count)?;
    g.classifier_iterations = e.get("classifier_iterations", d.classifier_iterations, count)?;

    c.tau = e.get("tau", c.tau, |v| {
        let x = number(v)?;
        if x > 0.0 && x < 1.0 {
            Ok(x)
        } else {
            Err(format!("must lie in (0, 1), got {x}"))
        }
    })?;
    c.eval_samples = e.get("eval_samples", c.eval_samples, positive_count)?;
    c.trace_every = e.get("trace_every", c.trace_every, count)?;
    c.raster_resolution = e.get("raster_resolution", c.raster_resolution, |v| {
        match count(v)? {
            r if r >= 2 => Ok(r),
            r => Err(format!("must be >= 2, got {r}")),
        }
    })?;
    c.raster_min = e.get("raster_min", c.raster_min, number)?;
    c.raster_max = e.get("raster_max", c.raster_max, number)?;
    c.checkpoint = e.get("checkpoint", None, |v| Ok(Some(PathBuf::from(v))))?;
    c.pretrained = match (
        e.raw("pretrained_generator"),
        e.raw("pretrained_discriminator"),
    ) {
        (None, None) => None,
        (Some((_, g)), Some((_, d))) => Some((PathBuf::from(g), PathBuf::from(d))),
        (Some((line, _)), None) | (None, Some((line, _))) => {
            return Err(Error::Config {
                line,
                msg: "pretrained_generator and pretrained_discriminator go together".into(),
            })
        }
    };
    c.validate()?;
    Ok(c)
}
