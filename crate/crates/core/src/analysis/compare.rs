use serde::{Deserialize, Serialize};

use super::mwu::{mann_whitney_u, SignificanceResult};
use super::savgol::savitzky_golay;
use super::{AnalysisError, GenerationStats, Metric};

pub const SIGNIFICANCE_NOTE: &str = "two-sided Mann-Whitney U over per-(generation, repetition) metric values pooled across all generations; exact null distribution when the smaller sample has at most 8 values, tie-corrected normal approximation otherwise";
pub const FINAL_FRACTION_NOTE: &str =
    "first/final third = the first/last max(1, floor(generations / 3)) generations";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Smoothing {
    pub window: usize,
    pub order: usize,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self { window: 7, order: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub overall_mean: Option<f64>,
    pub first_third_mean: Option<f64>,
    pub final_third_mean: Option<f64>,
    /// Per-generation mean across repetitions.
    pub series: Vec<Option<f64>>,
    /// Present when every generation has a value and the series spans the window.
    pub smoothed: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: Metric,
    pub ga: MethodSummary,
    pub random: MethodSummary,
    /// `(ga - random) / random`; `None` when the baseline is zero or missing.
    pub overall_delta: Option<f64>,
    pub final_third_delta: Option<f64>,
    pub significance: Option<SignificanceResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub generations: usize,
    pub ga_repetitions: usize,
    pub random_repetitions: usize,
    pub metrics: Vec<MetricComparison>,
}

impl Comparison {
    pub fn metric(&self, metric: Metric) -> &MetricComparison {
        self.metrics
            .iter()
            .find(|m| m.metric == metric)
            .expect("every metric is compared")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub significance_test: String,
    pub window_definition: String,
    pub smoothing: Smoothing,
    pub rl_mean_excludes_invalid: bool,
}

impl ReportMetadata {
    pub fn new(smoothing: Smoothing) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            significance_test: SIGNIFICANCE_NOTE.to_string(),
            window_definition: FINAL_FRACTION_NOTE.to_string(),
            smoothing,
            rl_mean_excludes_invalid: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub metadata: ReportMetadata,
    pub scenarios: Vec<Comparison>,
    /// All scenarios pooled, labelled `ALL`.
    pub aggregate: Option<Comparison>,
}

pub fn mean_of(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    super::mean(values)
}

fn third(generations: usize) -> usize {
    (generations / 3).max(1)
}

fn check_shapes(ga: &[Vec<GenerationStats>], random: &[Vec<GenerationStats>]) -> Result<usize, AnalysisError> {
    if ga.is_empty() || random.is_empty() {
        return Err(AnalysisError::Shape("both methods need at least one repetition".into()));
    }
    let gens = ga[0].len();
    if gens == 0 {
        return Err(AnalysisError::Shape("repetitions contain no generations".into()));
    }
    let population = ga[0][0].population;
    for rep in ga.iter().chain(random) {
        if rep.len() != gens {
            return Err(AnalysisError::Shape(format!(
                "generation counts differ: {} vs {gens}",
                rep.len()
            )));
        }
        if let Some(g) = rep.iter().find(|g| g.population != population) {
            return Err(AnalysisError::Shape(format!(
                "population sizes differ: {} vs {population} (generation {})",
                g.population, g.generation
            )));
        }
    }
    Ok(gens)
}

fn relative_delta(ga: Option<f64>, random: Option<f64>) -> Option<f64> {
    let (g, r) = (ga?, random?);
    if g == r {
        Some(0.0)
    } else if r == 0.0 {
        None
    } else {
        Some((g - r) / r)
    }
}

fn summarize(reps: &[Vec<GenerationStats>], metric: Metric, gens: usize, smoothing: Smoothing) -> MethodSummary {
    let span = |lo: usize, hi: usize| {
        mean_of(reps.iter().flat_map(|rep| rep[lo..hi].iter().filter_map(|s| metric.value(s))))
    };
    let k = third(gens);
    let series: Vec<Option<f64>> = (0..gens)
        .map(|g| mean_of(reps.iter().filter_map(|rep| metric.value(&rep[g]))))
        .collect();
    let smoothed = series
        .iter()
        .copied()
        .collect::<Option<Vec<f64>>>()
        .and_then(|full| savitzky_golay(&full, smoothing.window, smoothing.order).ok());
    MethodSummary {
        overall_mean: span(0, gens),
        first_third_mean: span(0, k),
        final_third_mean: span(gens - k, gens),
        series,
        smoothed,
    }
}

/// Summary of one method's repetitions, without a comparison partner.
pub fn method_summary(
    reps: &[Vec<GenerationStats>],
    metric: Metric,
    smoothing: Smoothing,
) -> Result<MethodSummary, AnalysisError> {
    let gens = check_shapes(reps, reps)?;
    Ok(summarize(reps, metric, gens, smoothing))
}

/// Compares GA and random-baseline runs of one scenario (or of a pooled
/// set of scenarios). Each inner vector is one repetition, indexed by
/// generation.
pub fn compare_runs(
    scenario: &str,
    ga: &[Vec<GenerationStats>],
    random: &[Vec<GenerationStats>],
    smoothing: Smoothing,
) -> Result<Comparison, AnalysisError> {
    let gens = check_shapes(ga, random)?;
    let metrics = Metric::ALL
        .iter()
        .map(|&metric| {
            let g = summarize(ga, metric, gens, smoothing);
            let r = summarize(random, metric, gens, smoothing);
            let pooled = |reps: &[Vec<GenerationStats>]| -> Vec<f64> {
                reps.iter().flatten().filter_map(|s| metric.value(s)).collect()
            };
            let (a, b) = (pooled(ga), pooled(random));
            let significance = (!a.is_empty() && !b.is_empty()).then(|| mann_whitney_u(&a, &b));
            MetricComparison {
                metric,
                overall_delta: relative_delta(g.overall_mean, r.overall_mean),
                final_third_delta: relative_delta(g.final_third_mean, r.final_third_mean),
                ga: g,
                random: r,
                significance,
            }
        })
        .collect();
    Ok(Comparison {
        scenario: scenario.to_string(),
        generations: gens,
        ga_repetitions: ga.len(),
        random_repetitions: random.len(),
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Stars;

    fn synthetic(gens: usize, offset: f64, phase: usize) -> Vec<GenerationStats> {
        (0..gens)
            .map(|g| {
                let wobble = ((g * 7 + phase * 3) % 5) as f64 * 0.1;
                GenerationStats {
                    generation: g,
                    population: 30,
                    rl_mean: Some(7.0 + wobble + offset),
                    rl_values: vec![7; 30],
                    nc: (g + phase) % 4,
                    mdg_mean_cm: Some(1500.0 - 10.0 * wobble),
                    mdec_mean_cm: Some(1600.0 - 10.0 * wobble),
                    nis: (g * 3 + phase) % 6,
                }
            })
            .collect()
    }

    #[test]
    fn identical_runs_give_zero_deltas_and_no_stars() {
        let runs: Vec<_> = (0..3).map(|r| synthetic(30, 0.0, r)).collect();
        let c = compare_runs("A", &runs, &runs, Smoothing::default()).unwrap();
        for m in &c.metrics {
            assert_eq!(m.overall_delta, Some(0.0), "{:?}", m.metric);
            assert_eq!(m.final_third_delta, Some(0.0), "{:?}", m.metric);
            assert_eq!(m.significance.unwrap().stars, Stars::Ns);
        }
    }

    #[test]
    fn shifted_rl_gives_expected_delta_and_three_stars() {
        let random: Vec<_> = (0..3).map(|r| synthetic(30, 0.0, r)).collect();
        let ga: Vec<_> = (0..3).map(|r| synthetic(30, 2.0, r)).collect();
        let c = compare_runs("A", &ga, &random, Smoothing::default()).unwrap();
        let rl = c.metric(Metric::Rl);
        let base = rl.random.overall_mean.unwrap();
        assert!((rl.overall_delta.unwrap() - 2.0 / base).abs() < 1e-12);
        assert_eq!(rl.significance.unwrap().stars, Stars::Three);
        assert!(rl.ga.smoothed.as_ref().is_some_and(|s| s.len() == 30));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let a = vec![synthetic(10, 0.0, 0)];
        let b = vec![synthetic(9, 0.0, 0)];
        assert!(matches!(compare_runs("A", &a, &b, Smoothing::default()), Err(AnalysisError::Shape(_))));
        let mut c = synthetic(10, 0.0, 0);
        c[4].population = 29;
        assert!(compare_runs("A", &a, &[c], Smoothing::default()).is_err());
        assert!(compare_runs("A", &[], &a, Smoothing::default()).is_err());
    }

    #[test]
    fn thirds_use_at_least_one_generation() {
        let a = vec![synthetic(2, 0.0, 0)];
        let c = compare_runs("A", &a, &a, Smoothing::default()).unwrap();
        let rl = c.metric(Metric::Rl);
        assert_eq!(rl.ga.first_third_mean, a[0][0].rl_mean);
        assert_eq!(rl.ga.final_third_mean, a[0][1].rl_mean);
        assert!(rl.ga.smoothed.is_none());
    }

    #[test]
    fn report_round_trips_through_json() {
        let runs: Vec<_> = (0..2).map(|r| synthetic(12, 0.0, r)).collect();
        let ga: Vec<_> = (0..2).map(|r| synthetic(12, 1.0, r)).collect();
        let c = compare_runs("B", &ga, &runs, Smoothing::default()).unwrap();
        let report = ComparisonReport {
            metadata: ReportMetadata::new(Smoothing::default()),
            aggregate: Some(Comparison { scenario: "ALL".into(), ..c.clone() }),
            scenarios: vec![c],
        };
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: ComparisonReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
