use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use threeplayer::harness::{
    comparison_table, load_classifier, load_run_data, parse_config, render_classifier,
    run_scenarios, run_scenarios_with, write_raster_ppm, ExperimentConfig, Palette, RunReport,
    Scenario,
};
use threeplayer::{Error, Result};

#[derive(Parser)]
#[command(
    name = "threeplayer",
    version,
    about = "Three-player GAN experiments on toy worlds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classifier trained on real data only.
    TrainBaseline(Common),
    /// Conditional GAN, plus a classifier trained on its samples alone.
    TrainCgan(Common),
    /// Auxiliary-classifier GAN; its class head is the classifier.
    TrainAcgan(Common),
    /// Conditional GAN pretraining followed by the three-player game.
    TrainThreeplayer(Common),
    /// Frozen-classifier game; reports where generated samples concentrate.
    ToyOverlap(Common),
    /// Renders the decision surface of a classifier checkpoint.
    RenderSurface(Common),
    /// Test accuracy of a classifier checkpoint.
    Eval(Common),
    /// Baseline, augmented cGAN, ACGAN and three-player side by side.
    Compare(Common),
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&common.config)?;
    parse_config(&text, common.seed)
}

fn checkpoint_of(config: &ExperimentConfig) -> Result<&Path> {
    let path = config.checkpoint.as_deref().ok_or_else(|| Error::Config {
        line: 0,
        msg: "missing required key checkpoint".into(),
    })?;
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint {} does not exist",
            path.display()
        )));
    }
    Ok(path)
}

fn finish(report: &RunReport) -> Result<bool> {
    print!("{}", report.to_text());
    for r in &report.results {
        if let Err(e) = &r.outcome {
            eprintln!("scenario {} failed: {e}", r.scenario.name());
        }
    }
    Ok(report.all_completed())
}

fn single(common: &Common, scenario: Scenario) -> Result<bool> {
    let config = load_config(common)?;
    finish(&run_scenarios_with(
        &config,
        &[scenario],
        Some(&common.out),
    )?)
}

fn overlap(common: &Common) -> Result<bool> {
    let config = load_config(common)?;
    if config.dataset.toy_spec().is_none() {
        return Err(Error::InvalidArgument(
            "toy-overlap needs a toy dataset (separable or overlap)".into(),
        ));
    }
    let report = run_scenarios_with(
        &config,
        &[Scenario::FrozenClassifierGame],
        Some(&common.out),
    )?;
    if let Some(m) = report.get(Scenario::FrozenClassifierGame) {
        if let (Some(after), Some(before)) = (m.overlap_score, m.reference_overlap_score) {
            println!(
                "overlap score (tau = {}): pretrained {before:.4}, after game {after:.4}",
                config.tau
            );
        }
    }
    finish(&report)
}

fn render(common: &Common) -> Result<bool> {
    let config = load_config(common)?;
    let classifier = load_classifier(checkpoint_of(&config)?)?;
    let inputs = classifier
        .trunk
        .as_ref()
        .unwrap_or(&classifier.head)
        .spec
        .input_width();
    if inputs != 2 {
        return Err(Error::InvalidArgument(
            "decision surfaces need two input features".into(),
        ));
    }
    let raster = render_classifier(&classifier, &config)?;
    std::fs::create_dir_all(&common.out)?;
    let path = common.out.join("surface.ppm");
    write_raster_ppm(&raster, &path, &Palette::default())?;
    println!("wrote {}", path.display());
    Ok(true)
}

fn eval(common: &Common) -> Result<bool> {
    let config = load_config(common)?;
    let classifier = load_classifier(checkpoint_of(&config)?)?;
    let data = load_run_data(&config)?;
    let test = classifier.accuracy(&data.test)?;
    let train = classifier.accuracy(&data.train.samples)?;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(
        common.out.join("eval.csv"),
        format!("metric,value\ntest_accuracy,{test:.6}\ntrain_accuracy,{train:.6}\n"),
    )?;
    println!("test accuracy {test:.4} ({} samples)", data.test.len());
    println!(
        "train accuracy {train:.4} ({} samples)",
        data.train.samples.len()
    );
    Ok(true)
}

fn compare(common: &Common) -> Result<bool> {
    let mut config = load_config(common)?;
    config.scenarios = Scenario::COMPARISON.to_vec();
    let report = run_scenarios(&config, Some(&common.out))?;
    let table = comparison_table(&report);
    std::fs::write(common.out.join("comparison.txt"), &table)?;
    print!("{table}");
    finish(&report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::TrainBaseline(c) => single(c, Scenario::Baseline),
        Command::TrainCgan(c) => single(c, Scenario::Cgan),
        Command::TrainAcgan(c) => single(c, Scenario::Acgan),
        Command::TrainThreeplayer(c) => single(c, Scenario::ThreePlayer),
        Command::ToyOverlap(c) => overlap(c),
        Command::RenderSurface(c) => render(c),
        Command::Eval(c) => eval(c),
        Command::Compare(c) => compare(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
