//! Experiment orchestration: configuration, seeded Monte-Carlo runs, CSV and
//! plot-script output, and the validation battery.

mod config;
mod output;
mod run;
mod validate;

pub use config::{modulation_name, parse_snr_list, ExperimentConfig, TauPolicy, CONFIG_KEYS};
pub use output::{
    plot_script, render_csv, render_fisher_csv, version_string, write_outputs, WrittenFiles, CSV_COLUMNS,
    FISHER_COLUMNS,
};
pub use run::{
    fisher_check, point_bounds, run_ber, run_crlb, run_nmse, Experiment, ExperimentOutput, FisherRow, PointBounds,
    PointStats, ResultRow, Setup, Trial,
};
pub use validate::{run_validate, run_validate_with, Check, ValidationReport};
