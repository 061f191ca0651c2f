//! Experiment orchestration: configuration, runs, reports and the CLI.

pub mod cli;
mod config;
mod io;
mod report;
mod run;

use thiserror::Error;

pub use config::{resolve_scenarios, Baseline, ExperimentConfig, ResolvedScenario, ScriptSource};
pub use io::{read_simulations, SimulationRow, GENERATION_STATS_FILE, MANIFEST_FILE, SIMULATIONS_FILE};
pub use report::{cmd_report, ReportFiles, AGGREGATE_LABEL, COMPARISON_FILE, TRENDS_FILE, TRENDS_SMOOTHED_FILE};
pub use run::{
    cmd_run, repetition_seed, GenerationTiming, ParallelEvaluator, ResampleEvent, RunCounts, RunManifest, ScenarioSeeds,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flags, config or scripts.
    #[error("{0}")]
    Config(String),
    /// Failures while running or reading artifacts.
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Runtime(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

fn runtime(context: impl std::fmt::Display, err: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(format!("{context}: {err}"))
}
