//! Configuration, dataset and artifact I/O, and scenario runs.

mod checkpoint;
mod config;
mod dataset;
mod ppm;
mod run;

pub use checkpoint::{
    format_checkpoint, format_hex_float, load_checkpoint, parse_checkpoint, parse_hex_float,
    save_checkpoint,
};
pub use config::{parse_config, DatasetSource, ExperimentConfig, Scenario};
pub use dataset::{
    align_labels, format_dataset_csv, load_dataset_csv, parse_dataset_csv, save_dataset_csv,
    Dataset,
};
pub use ppm::{format_raster_ppm, format_raster_scores, scores_path, write_raster_ppm, Palette};
pub use run::{
    classifier_from_params, comparison_table, load_classifier, load_run_data, raster_bounds,
    render_classifier, run_scenarios, run_scenarios_with, RunData, RunReport, ScenarioMetrics,
    ScenarioResult,
};
