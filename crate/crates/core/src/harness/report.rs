use std::fs;
use std::path::{Path, PathBuf};

use super::io::{num, read_simulations, MANIFEST_FILE, SIMULATIONS_FILE};
use super::run::RunManifest;
use super::{runtime, HarnessError, Result};
use crate::analysis::{
    compare_runs, generation_stats, method_summary, Comparison, ComparisonReport, GenerationStats, Metric,
    ReportMetadata, Smoothing,
};

pub const COMPARISON_FILE: &str = "comparison.json";
pub const TRENDS_FILE: &str = "trends.csv";
pub const TRENDS_SMOOTHED_FILE: &str = "trends_smoothed.csv";
pub const AGGREGATE_LABEL: &str = "ALL";
const METHODS: [&str; 2] = ["ga", "random"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub comparison: PathBuf,
    pub trends: PathBuf,
    pub trends_smoothed: PathBuf,
    pub report: ComparisonReport,
}

/// Per-generation statistics of one scenario, grouped by method; each
/// inner vector is one repetition.
struct ScenarioRuns {
    label: String,
    by_method: [Vec<Vec<GenerationStats>>; 2],
}

fn load_run(dir: &Path, runs: &mut Vec<ScenarioRuns>) -> Result<Option<Smoothing>> {
    let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
    let sims_path = dir.join(SIMULATIONS_FILE);
    let rows = read_simulations(&sims_path)?;
    if rows.len() != manifest.counts.simulations {
        return Err(runtime(
            sims_path.display(),
            format!("{} rows but the manifest records {}", rows.len(), manifest.counts.simulations),
        ));
    }
    // Rows are written grouped by (scenario, repetition, method, generation).
    let mut i = 0;
    while i < rows.len() {
        let head = &rows[i];
        let method = METHODS
            .iter()
            .position(|m| *m == head.method)
            .ok_or_else(|| runtime(sims_path.display(), format!("unknown method '{}'", head.method)))?;
        let same_run = |r: &super::SimulationRow| {
            r.scenario == head.scenario && r.method == head.method && r.repetition == head.repetition
        };
        let end = i + rows[i..].iter().take_while(|r| same_run(r)).count();
        let mut gens: Vec<GenerationStats> = Vec::new();
        let mut j = i;
        while j < end {
            let g = rows[j].generation;
            let k = j + rows[j..end].iter().take_while(|r| r.generation == g).count();
            let pairs: Vec<_> = rows[j..k].iter().map(|r| (r.outcome(), r.score())).collect();
            gens.push(generation_stats(g, pairs.iter().map(|(o, s)| (o, s))));
            j = k;
        }
        let slot = match runs.iter().position(|r| r.label == head.scenario) {
            Some(p) => p,
            None => {
                runs.push(ScenarioRuns {
                    label: head.scenario.clone(),
                    by_method: [Vec::new(), Vec::new()],
                });
                runs.len() - 1
            }
        };
        runs[slot].by_method[method].push(gens);
        i = end;
    }
    Ok(Some(manifest.config.smoothing))
}

fn trend_rows(
    label: &str,
    by_method: &[Vec<Vec<GenerationStats>>; 2],
    smoothing: Smoothing,
    raw: &mut csv::Writer<Vec<u8>>,
    smooth: &mut csv::Writer<Vec<u8>>,
) -> Result<()> {
    for (m, reps) in by_method.iter().enumerate() {
        if reps.is_empty() {
            continue;
        }
        for metric in Metric::ALL {
            let s = method_summary(reps, metric, smoothing).map_err(|e| HarnessError::Runtime(format!("{label}: {e}")))?;
            for (g, v) in s.series.iter().enumerate() {
                raw.write_record([label, METHODS[m], metric.name(), &g.to_string(), &num(*v)])
                    .map_err(|e| runtime(TRENDS_FILE, e))?;
            }
            for (g, v) in s.smoothed.iter().flatten().enumerate() {
                smooth
                    .write_record([label, METHODS[m], metric.name(), &g.to_string(), &v.to_string()])
                    .map_err(|e| runtime(TRENDS_SMOOTHED_FILE, e))?;
            }
        }
    }
    Ok(())
}

/// Builds the comparison report and plot-ready trend tables from one or
/// more run directories. Repetitions of the same scenario across
/// directories are pooled.
pub fn cmd_report(run_dirs: &[PathBuf], out_dir: &Path, smoothing: Option<Smoothing>) -> Result<ReportFiles> {
    if run_dirs.is_empty() {
        return Err(HarnessError::Config("report needs at least one run directory".into()));
    }
    let mut runs = Vec::new();
    let mut configured = None;
    for dir in run_dirs {
        let s = load_run(dir, &mut runs)?;
        configured = configured.or(s);
    }
    let smoothing = smoothing.or(configured).unwrap_or_default();

    let mut scenarios: Vec<Comparison> = Vec::new();
    for r in &runs {
        let [ga, random] = &r.by_method;
        if !ga.is_empty() && !random.is_empty() {
            scenarios.push(
                compare_runs(&r.label, ga, random, smoothing)
                    .map_err(|e| HarnessError::Runtime(format!("{}: {e}", r.label)))?,
            );
        }
    }
    let pooled: [Vec<Vec<GenerationStats>>; 2] =
        [0, 1].map(|m| runs.iter().flat_map(|r| r.by_method[m].iter().cloned()).collect());
    let all_have_baseline = runs.iter().all(|r| !r.by_method[1].is_empty());
    let aggregate = if all_have_baseline && runs.len() > 1 {
        compare_runs(AGGREGATE_LABEL, &pooled[0], &pooled[1], smoothing).ok()
    } else {
        None
    };

    let mut raw = csv::Writer::from_writer(Vec::new());
    let mut smooth = csv::Writer::from_writer(Vec::new());
    let header = ["scenario", "method", "metric", "generation", "value"];
    raw.write_record(header).map_err(|e| runtime(TRENDS_FILE, e))?;
    smooth.write_record(header).map_err(|e| runtime(TRENDS_SMOOTHED_FILE, e))?;
    for r in &runs {
        trend_rows(&r.label, &r.by_method, smoothing, &mut raw, &mut smooth)?;
    }
    if aggregate.is_some() {
        trend_rows(AGGREGATE_LABEL, &pooled, smoothing, &mut raw, &mut smooth)?;
    }

    let report = ComparisonReport {
        metadata: ReportMetadata::new(smoothing),
        scenarios,
        aggregate,
    };
    fs::create_dir_all(out_dir).map_err(|e| runtime(out_dir.display(), e))?;
    let files = ReportFiles {
        comparison: out_dir.join(COMPARISON_FILE),
        trends: out_dir.join(TRENDS_FILE),
        trends_smoothed: out_dir.join(TRENDS_SMOOTHED_FILE),
        report,
    };
    let json = serde_json::to_string_pretty(&files.report).map_err(|e| runtime(COMPARISON_FILE, e))?;
    fs::write(&files.comparison, json + "\n").map_err(|e| runtime(files.comparison.display(), e))?;
    for (path, w) in [(&files.trends, raw), (&files.trends_smoothed, smooth)] {
        let bytes = w.into_inner().map_err(|e| runtime(path.display(), e))?;
        fs::write(path, bytes).map_err(|e| runtime(path.display(), e))?;
    }
    Ok(files)
}
