use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::analysis::Smoothing;
use crate::fitness::FitnessBands;
use crate::ga::GaConfig;
use crate::scenario_dsl;
use crate::scenario_model::{template_with_geometry, GeometryParams, Param, ParameterRange, RangeSet, ScenarioId, ScenarioTemplate};
use crate::simulator::SimulationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Random sampling with the GA's exact simulation budget.
    RandomMatched,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in ids (`A`..`F`) or paths to `.ccs` scripts.
    pub scenarios: Vec<String>,
    pub repetitions: usize,
    pub baseline: Baseline,
    pub output_dir: PathBuf,
    /// Evaluation threads; 0 uses every core. Never affects outputs.
    pub jobs: usize,
    /// Fill the per-simulation `wall_ms` column. Off keeps CSVs byte-stable.
    pub timings: bool,
    /// Write the trace of each run's highest-scoring simulation.
    pub trace_best: bool,
    pub ga: GaConfig,
    pub sim: SimulationConfig,
    pub geometry: GeometryParams,
    pub fitness: FitnessBands,
    /// Search ranges by parameter name, `[low, high]`; unlisted genes keep defaults.
    pub ranges: BTreeMap<String, [f64; 2]>,
    pub smoothing: Smoothing,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenarios: ScenarioId::NAMED.iter().map(ToString::to_string).collect(),
            repetitions: 1,
            baseline: Baseline::RandomMatched,
            output_dir: PathBuf::from("runs/latest"),
            jobs: 0,
            timings: false,
            trace_best: false,
            ga: GaConfig::default(),
            sim: SimulationConfig::default(),
            geometry: GeometryParams::default(),
            fitness: FitnessBands::default(),
            ranges: BTreeMap::new(),
            smoothing: Smoothing::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Range overrides from the `ranges` table.
    pub fn range_overrides(&self) -> Result<Vec<ParameterRange>> {
        self.ranges
            .iter()
            .map(|(name, [lo, hi])| {
                let param = Param::from_str(name).map_err(|e| HarnessError::Config(format!("ranges: {e}")))?;
                let r = ParameterRange::new(param, *lo, *hi).map_err(|e| HarnessError::Config(format!("ranges: {e}")))?;
                if !r.within_bounds() {
                    let (a, b) = param.bounds();
                    return Err(HarnessError::Config(format!(
                        "ranges: {param} = [{lo}, {hi}] leaves the legal bounds [{a}, {b}]"
                    )));
                }
                Ok(r)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.scenarios.is_empty() {
            return bad("no scenarios configured".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        self.ga.validate().map_err(|e| HarnessError::Config(format!("ga: {e}")))?;
        self.sim.validate().map_err(|e| HarnessError::Config(format!("sim: {e}")))?;
        self.geometry.validate().map_err(|e| HarnessError::Config(format!("geometry: {e}")))?;
        self.fitness.validate().map_err(|e| HarnessError::Config(format!("fitness: {e}")))?;
        self.range_overrides()?;
        if self.smoothing.window.is_multiple_of(2) || self.smoothing.order == 0 || self.smoothing.order >= self.smoothing.window {
            return bad(format!(
                "smoothing: window must be odd and 1 <= order < window (window {}, order {})",
                self.smoothing.window, self.smoothing.order
            ));
        }
        Ok(())
    }
}

/// Text of a script used by a run, kept so the run can be replayed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptSource {
    /// The `scenarios` entry that named the script.
    pub entry: String,
    pub source: String,
}

/// A scenario entry turned into everything a run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub label: String,
    pub template: ScenarioTemplate,
    pub ranges: RangeSet,
    pub sim: SimulationConfig,
    pub script: Option<ScriptSource>,
}

fn render(diags: &[scenario_dsl::ParseDiagnostic], origin: &str) -> String {
    diags
        .iter()
        .map(|d| format!("{origin}:{d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Resolves every entry. Script entries are read from `embedded` when
/// present there, otherwise from disk.
pub fn resolve_scenarios(cfg: &ExperimentConfig, embedded: &[ScriptSource]) -> Result<Vec<ResolvedScenario>> {
    let overrides = cfg.range_overrides()?;
    let base_ranges = RangeSet::with_overrides(&overrides).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut out = Vec::new();
    let mut labels = BTreeSet::new();
    for entry in &cfg.scenarios {
        let resolved = if let Ok(id) = ScenarioId::from_str(entry) {
            ResolvedScenario {
                label: id.to_string(),
                template: template_with_geometry(&id, cfg.geometry).map_err(|e| HarnessError::Config(format!("{entry}: {e}")))?,
                ranges: base_ranges,
                sim: cfg.sim,
                script: None,
            }
        } else {
            let source = match embedded.iter().find(|s| &s.entry == entry) {
                Some(s) => s.source.clone(),
                None => fs::read_to_string(entry)
                    .map_err(|e| HarnessError::Config(format!("scenario '{entry}' is neither A-F nor a readable script: {e}")))?,
            };
            let ast = scenario_dsl::parse(&source).map_err(|d| HarnessError::Config(render(&d, entry)))?;
            let (template, _, _) = scenario_dsl::compile_with_geometry(&ast, cfg.geometry)
                .map_err(|d| HarnessError::Config(render(&d, entry)))?;
            // Script declarations take precedence over the config file.
            let mut ranges = base_ranges;
            let script_ranges: Vec<ParameterRange> = ast
                .params
                .iter()
                .map(|d| ParameterRange { param: d.param, low: d.low, high: d.high, unit: d.unit })
                .collect();
            let mut merged: Vec<ParameterRange> = ranges.as_slice().to_vec();
            for r in script_ranges {
                merged[r.param.index()] = r;
            }
            ranges = RangeSet::from_list(&merged).map_err(|e| HarnessError::Config(format!("{entry}: {e}")))?;
            let sim = SimulationConfig {
                timestep: ast.sim.timestep.unwrap_or(cfg.sim.timestep),
                horizon: ast.sim.horizon.unwrap_or(cfg.sim.horizon),
                interaction_radius: ast.sim.interaction_radius.unwrap_or(cfg.sim.interaction_radius),
            };
            sim.validate().map_err(|e| HarnessError::Config(format!("{entry}: {e}")))?;
            ResolvedScenario {
                label: template.id.to_string(),
                template,
                ranges,
                sim,
                script: Some(ScriptSource { entry: entry.clone(), source }),
            }
        };
        if !labels.insert(resolved.label.clone()) {
            return Err(HarnessError::Config(format!("scenario '{}' listed twice", resolved.label)));
        }
        out.push(resolved);
    }
    Ok(out)
}
