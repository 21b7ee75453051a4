//! End-to-end orchestration: data, patterns, fakes, collection, metrics.

mod config;
mod data;
mod run;

pub use config::{
    DataSection, DataSource, DefenseKind, ExperimentConfig, GridSection, GridTraceSection,
    PatternSection, PatternSource, ProtocolKind, SweepSection, CONFIG_SCHEMA,
};
pub use data::{generate_synthetic, load_dataset, sample_target_patterns, LoadedDataset};
pub use run::{
    fake_submissions, prepare_workload, repetition_seed, run_conditions, run_experiment, sweep,
    sweep_configs, write_reports_csv, ConditionReport, ConditionRun, RunReport, Workload,
};
