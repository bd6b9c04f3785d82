//! Experiment orchestration: configuration, single runs, sweeps, reports
//! and the self-check suite behind the command-line tool.

pub mod config;
pub mod report;
pub mod run;
pub mod validate;

pub use config::{EqualizationMode, ExperimentConfig, FitSource, LatticeSpec, SweepAxes};
pub use report::{emit_report, read_results, refit, ResultRow};
pub use run::{calibrate_tau, equalization_audit, run_single, run_single_detailed, run_sweep, RunResult, SweepOutcome};
pub use validate::{validate_all, Check};
