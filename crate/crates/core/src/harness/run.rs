use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{resolve_scenarios, Baseline, ExperimentConfig, ResolvedScenario, ScriptSource};
use super::io::{CsvSinks, RowKey, GENERATION_STATS_FILE, MANIFEST_FILE, SIMULATIONS_FILE};
use super::{runtime, HarnessError, Result};
use crate::analysis::generation_stats;
use crate::ga::{run_ga, run_random_baseline, Evaluator, GaConfig, GaHistory};
use crate::rng::{derive_seed, fnv1a};
use crate::scenario_model::Genome;
use crate::simulator::{build_paths, run_with_paths, write_trace_csv, PathPair, SimulationConfig, SimulationOutcome, TraceMode};

/// Evaluates a batch on a thread pool; outcomes keep input order.
pub struct ParallelEvaluator<'a> {
    paths: &'a PathPair,
    sim: SimulationConfig,
    pool: &'a rayon::ThreadPool,
    batches: Mutex<Vec<BatchTiming>>,
}

#[derive(Debug, Clone)]
struct BatchTiming {
    wall_ms: f64,
    per_simulation_ms: Vec<f64>,
}

impl<'a> ParallelEvaluator<'a> {
    pub fn new(paths: &'a PathPair, sim: SimulationConfig, pool: &'a rayon::ThreadPool) -> Self {
        Self {
            paths,
            sim,
            pool,
            batches: Mutex::new(Vec::new()),
        }
    }

    fn take_batches(&self) -> Vec<BatchTiming> {
        std::mem::take(&mut *self.batches.lock().expect("timing lock"))
    }
}

impl Evaluator for ParallelEvaluator<'_> {
    fn evaluate(&self, genomes: &[Genome]) -> Vec<SimulationOutcome> {
        let start = Instant::now();
        let timed: Vec<(SimulationOutcome, f64)> = self.pool.install(|| {
            genomes
                .par_iter()
                .map(|g| {
                    let t = Instant::now();
                    let o = run_with_paths(self.paths, g, &self.sim, TraceMode::Off);
                    (o, t.elapsed().as_secs_f64() * 1e3)
                })
                .collect()
        });
        let (outcomes, per_simulation_ms): (Vec<_>, Vec<_>) = timed.into_iter().unzip();
        self.batches.lock().expect("timing lock").push(BatchTiming {
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            per_simulation_ms,
        });
        outcomes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationTiming {
    pub scenario: String,
    pub method: String,
    pub repetition: usize,
    pub generation: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleEvent {
    pub scenario: String,
    pub repetition: usize,
    pub generation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunCounts {
    pub simulations: usize,
    pub ga_simulations: usize,
    pub random_simulations: usize,
    pub stats_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSeeds {
    pub scenario: String,
    /// Seed of each repetition, shared by the GA and its baseline (which
    /// draw from disjoint streams).
    pub seeds: Vec<u64>,
}

/// Everything needed to reproduce a run, plus what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub scripts: Vec<ScriptSource>,
    pub scenarios: Vec<ScenarioSeeds>,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub counts: RunCounts,
    pub resample_events: Vec<ResampleEvent>,
    pub timings: Vec<GenerationTiming>,
    pub total_wall_ms: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| runtime(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| runtime(path.display(), format!("corrupt manifest: {e}")))
    }
}

/// Seed of one repetition of one scenario.
pub fn repetition_seed(base: u64, label: &str, repetition: usize) -> u64 {
    derive_seed(derive_seed(base, fnv1a(label.as_bytes())), repetition as u64)
}

fn run_id(cfg: &ExperimentConfig, scripts: &[ScriptSource]) -> String {
    let mut text = cfg.to_toml();
    for s in scripts {
        text.push_str(&s.entry);
        text.push_str(&s.source);
    }
    format!("{:016x}", fnv1a(text.as_bytes()))
}

fn best_index(history: &GaHistory) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), i32)> = None;
    for g in &history.generations {
        for (i, ind) in g.individuals.iter().enumerate() {
            if ind.score.is_valid() && best.is_none_or(|(_, s)| ind.score.total > s) {
                best = Some(((g.index, i), ind.score.total));
            }
        }
    }
    best.map(|(at, _)| at)
}

struct RunState<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    sinks: CsvSinks,
    counts: RunCounts,
    timings: Vec<GenerationTiming>,
    resample_events: Vec<ResampleEvent>,
    artifacts: Vec<String>,
}

impl RunState<'_> {
    fn record(
        &mut self,
        scenario: &ResolvedScenario,
        paths: &PathPair,
        method: &str,
        repetition: usize,
        history: &GaHistory,
        batches: Vec<BatchTiming>,
    ) -> Result<()> {
        let key = RowKey {
            scenario: &scenario.label,
            method,
            repetition,
        };
        for (g, batch) in history.generations.iter().zip(&batches) {
            for (i, (ind, outcome)) in g.individuals.iter().zip(&g.outcomes).enumerate() {
                let wall = self.cfg.timings.then(|| batch.per_simulation_ms[i]);
                self.sinks.simulation(&key, g.index, i, &ind.genome, outcome, &ind.score, wall)?;
            }
            let stats = generation_stats(g.index, g.outcomes.iter().zip(g.individuals.iter().map(|i| &i.score)));
            self.sinks.stats(&key, &stats)?;
            self.timings.push(GenerationTiming {
                scenario: scenario.label.clone(),
                method: method.to_string(),
                repetition,
                generation: g.index,
                wall_ms: batch.wall_ms,
            });
            if g.resampled {
                self.resample_events.push(ResampleEvent {
                    scenario: scenario.label.clone(),
                    repetition,
                    generation: g.index,
                });
            }
        }
        let n: usize = history.generations.iter().map(|g| g.outcomes.len()).sum();
        self.counts.simulations += n;
        if method == "ga" {
            self.counts.ga_simulations += n;
        } else {
            self.counts.random_simulations += n;
        }

        if self.cfg.trace_best {
            if let Some((gen, idx)) = best_index(history) {
                let genome = history.generations[gen].individuals[idx].genome;
                let outcome = run_with_paths(paths, &genome, &scenario.sim, TraceMode::Full);
                let rel = format!("traces/{}_{method}_r{repetition}.csv", scenario.label);
                let path = self.dir.join(&rel);
                fs::create_dir_all(path.parent().expect("trace dir")).map_err(|e| runtime(path.display(), e))?;
                let file = fs::File::create(&path).map_err(|e| runtime(path.display(), e))?;
                write_trace_csv(&outcome.trace, std::io::BufWriter::new(file)).map_err(|e| runtime(path.display(), e))?;
                self.artifacts.push(rel);
            }
        }
        Ok(())
    }
}

/// Runs every configured scenario and repetition, writing all artifacts
/// into `cfg.output_dir`. `embedded` supplies script texts (for replays).
pub fn cmd_run(cfg: &ExperimentConfig, embedded: &[ScriptSource]) -> Result<RunManifest> {
    cfg.validate()?;
    let scenarios = resolve_scenarios(cfg, embedded)?;
    let scripts: Vec<ScriptSource> = scenarios.iter().filter_map(|s| s.script.clone()).collect();
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| runtime(dir.display(), e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("thread pool: {e}")))?;

    let start = Instant::now();
    let mut state = RunState {
        cfg,
        dir,
        sinks: CsvSinks::create(dir)?,
        counts: RunCounts::default(),
        timings: Vec::new(),
        resample_events: Vec::new(),
        artifacts: vec![SIMULATIONS_FILE.into(), GENERATION_STATS_FILE.into()],
    };
    let mut seeds = Vec::new();
    for scenario in &scenarios {
        let paths = build_paths(&scenario.template);
        let evaluator = ParallelEvaluator::new(&paths, scenario.sim, &pool);
        let mut rep_seeds = Vec::new();
        for rep in 0..cfg.repetitions {
            let seed = repetition_seed(cfg.ga.seed, &scenario.label, rep);
            rep_seeds.push(seed);
            let ga_cfg = GaConfig { seed, ..cfg.ga };
            let history = run_ga(&ga_cfg, &scenario.ranges, &cfg.fitness, &evaluator);
            state.record(scenario, &paths, "ga", rep, &history, evaluator.take_batches())?;
            if cfg.baseline == Baseline::RandomMatched {
                let history = run_random_baseline(&ga_cfg, &scenario.ranges, &cfg.fitness, &evaluator);
                state.record(scenario, &paths, "random", rep, &history, evaluator.take_batches())?;
            }
        }
        seeds.push(ScenarioSeeds {
            scenario: scenario.label.clone(),
            seeds: rep_seeds,
        });
    }
    state.counts.stats_rows = state.sinks.stats_rows;
    debug_assert_eq!(state.sinks.rows, state.counts.simulations);
    let RunState {
        sinks,
        counts,
        timings,
        resample_events,
        mut artifacts,
        ..
    } = state;
    sinks.finish()?;
    artifacts.push(MANIFEST_FILE.into());

    let manifest = RunManifest {
        run_id: run_id(cfg, &scripts),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.ga.seed,
        config: cfg.clone(),
        scripts,
        scenarios: seeds,
        artifacts,
        counts,
        resample_events,
        timings,
        total_wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| runtime(path.display(), e))?;
    fs::write(&path, text + "\n").map_err(|e| runtime(path.display(), e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_seeds_are_distinct() {
        let mut all: Vec<u64> = ["A", "B"]
            .iter()
            .flat_map(|l| (0..5).map(move |r| repetition_seed(42, l, r)))
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 10);
    }
}
