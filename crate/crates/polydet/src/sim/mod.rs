//! Reproducible experiment runner: configs, sweeps, reports, validation and
//! file output.

mod config;
mod output;
mod report;
mod scenario;
mod sweep;
mod validate;

pub use config::{ExperimentConfig, MacGroup, Scenario, SinrEval, WeightSource};
pub use output::{
    REPORT_HEADER, RunMeta, SWEEP_HEADER, gnuplot_ber_script, gnuplot_sinr_script,
    write_report_csv, write_sweep_csv,
};
pub use report::{MomentReport, MomentReportRow, run_moment_report};
pub use scenario::build_profile;
pub use sweep::{ResultRow, SweepOutput, UserTag, run_ber_sweep, run_sinr_sweep};
pub use validate::{SuiteOutcome, ValidateOptions, ValidationReport, run_validate};
