//! Experiment configuration, training runs, ablations and the pathology
//! probe.

mod ablation;
mod config;
mod probe;
mod run;
mod train;

pub use ablation::{ablation_variants, default_toggles, run_ablation, AblationRow, AblationTable, Toggle, Variant};
pub use config::{AdamPhase, CollocationSpec, ExperimentConfig, ReferenceSpec, TrainConfig, PRESETS};
pub use probe::{run_probe, ProbeReport, ProbeRow, ProbeSettings, ProbeStatus, EM_SPREAD_MIN, MLP_SPREAD_MAX};
pub use run::{
    evaluate_run, export_grid, generate_reference, load_reference, run_experiment, run_experiment_with, seed_dir,
    write_metrics, RunRecord, SeedRecord,
};
pub use train::{evaluate_on_grid, train_seed, train_seed_with, MetricRow, SeedStatus, TrainOutcome};
