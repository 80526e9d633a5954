//! Config-driven experiments: source training, every strategy on every
//! (ratio, seed) cell, metric and degree reports, and plot-ready data.

mod config;
mod plots;
mod run;

pub use config::{DatasetSpec, ExperimentConfig, ModelSpec, UnlearnOverrides};
pub use plots::{
    emit_plot_data, PlotFiles, ACCELERATION_FILE, ACCELERATION_HEADER, CURVES_DIR, CURVE_HEADER,
    DEGREE_FILE, DEGREE_HEADER, GAPS_FILE, RANDOM_TOPK_FILE, RANDOM_TOPK_HEADER,
};
pub use run::{
    cell_dir, run_experiment, train_source, ExperimentManifest, RunEntry, RunStatus, SourceEntry,
    StageFailure, MANIFEST_FILE, MANIFEST_FORMAT, MANIFEST_VERSION, METRICS_FILE,
};
