//! Experiment orchestration: configuration with presets, launch-power and
//! receiver-subset sweeps, persistence and plot-data export.

mod config;
mod export;
mod pipeline;
mod run;

pub use config::{preset, preset_names, validate_spec, ConfigIssue, ExperimentSpec, FrontEnd, RxDspConfig};
pub use export::{export_plotdata, Figure};
pub use pipeline::{prepare, run_point, PointOutput, Prepared, SubsetOutput};
pub use run::{derive_seed, run_experiment, write_results, PointResult, ResultSet, RunOptions};
