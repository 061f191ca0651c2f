//! Per-generation metrics, trend smoothing and GA-vs-random comparison.

mod compare;
mod mwu;
mod savgol;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::RiskScore;
use crate::simulator::SimulationOutcome;

pub use compare::{
    compare_runs, mean_of, method_summary, Comparison, ComparisonReport, MethodSummary, MetricComparison, ReportMetadata,
    Smoothing, FINAL_FRACTION_NOTE, SIGNIFICANCE_NOTE,
};
pub use mwu::{mann_whitney_u, midranks, PMethod, SignificanceResult, Stars, EXACT_MAX};
pub use savgol::savitzky_golay;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("filter parameters: {0}")]
    Filter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rl,
    Nc,
    Mdg,
    Mdec,
    Nis,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Rl, Metric::Nc, Metric::Mdg, Metric::Mdec, Metric::Nis];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rl => "rl",
            Metric::Nc => "nc",
            Metric::Mdg => "mdg_cm",
            Metric::Mdec => "mdec_cm",
            Metric::Nis => "nis",
        }
    }

    pub fn value(self, s: &GenerationStats) -> Option<f64> {
        match self {
            Metric::Rl => s.rl_mean,
            Metric::Nc => Some(s.nc as f64),
            Metric::Mdg => s.mdg_mean_cm,
            Metric::Mdec => s.mdec_mean_cm,
            Metric::Nis => Some(s.nis as f64),
        }
    }
}

/// Aggregates of one generation. Means are `None` when nothing qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub population: usize,
    /// Mean risk over valid individuals only.
    pub rl_mean: Option<f64>,
    /// Every individual's score, -1 included.
    pub rl_values: Vec<i32>,
    pub nc: usize,
    /// Mean minimum distance over valid outcomes.
    pub mdg_mean_cm: Option<f64>,
    /// Mean minimum distance over valid, collision-free outcomes.
    pub mdec_mean_cm: Option<f64>,
    pub nis: usize,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn generation_stats<'a, I>(generation: usize, items: I) -> GenerationStats
where
    I: IntoIterator<Item = (&'a SimulationOutcome, &'a RiskScore)>,
{
    let items: Vec<_> = items.into_iter().collect();
    let valid: Vec<_> = items.iter().filter(|(o, s)| o.valid && s.is_valid()).collect();
    GenerationStats {
        generation,
        population: items.len(),
        rl_mean: mean(valid.iter().map(|(_, s)| f64::from(s.total))),
        rl_values: items.iter().map(|(_, s)| s.total).collect(),
        nc: items.iter().filter(|(o, _)| o.valid && o.collision).count(),
        mdg_mean_cm: mean(valid.iter().filter_map(|(o, _)| o.md_cm)),
        mdec_mean_cm: mean(valid.iter().filter(|(o, _)| !o.collision).filter_map(|(o, _)| o.md_cm)),
        nis: items.len() - valid.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::{risk_level, FitnessBands};
    use crate::simulator::InvalidReason;

    fn scored(o: SimulationOutcome) -> (SimulationOutcome, RiskScore) {
        let s = risk_level(&o, &FitnessBands::default());
        (o, s)
    }

    #[test]
    fn all_invalid_generation() {
        let items: Vec<_> = (0..100).map(|_| scored(SimulationOutcome::invalid(InvalidReason::NoInteraction))).collect();
        let s = generation_stats(0, items.iter().map(|(o, r)| (o, r)));
        assert_eq!(s.nis, 100);
        assert_eq!(s.nc, 0);
        assert_eq!((s.rl_mean, s.mdg_mean_cm, s.mdec_mean_cm), (None, None, None));
    }

    #[test]
    fn single_valid_collision() {
        let mut items: Vec<_> = (0..99).map(|_| scored(SimulationOutcome::invalid(InvalidReason::NoInteraction))).collect();
        items.push(scored(SimulationOutcome::valid(true, 100.0, 3000.0, 200.0)));
        let s = generation_stats(3, items.iter().map(|(o, r)| (o, r)));
        assert_eq!(s.rl_mean, Some(22.0));
        assert_eq!(s.nc, 1);
        assert_eq!(s.mdg_mean_cm, Some(100.0));
        assert_eq!(s.mdec_mean_cm, None);
        assert_eq!(s.nis, 99);
        assert!(s.nc + s.nis <= s.population);
    }

    #[test]
    fn mixed_batch_matches_manual_computation() {
        let raw = [
            SimulationOutcome::valid(true, 120.0, 2500.0, 150.0),  // 10+4+4+4 = 22
            SimulationOutcome::valid(false, 900.0, 3900.0, 380.0), // 0+3+3+3 = 9
            SimulationOutcome::valid(false, 1200.0, 4100.0, 400.0), // 0+2+2+2 = 6
            SimulationOutcome::valid(false, 2000.0, 5000.0, f64::INFINITY), // 0
            SimulationOutcome::invalid(InvalidReason::NoInteraction),
            SimulationOutcome::valid(true, 300.0, 3800.0, 360.0), // 10+4+3+3 = 20
            SimulationOutcome::invalid(InvalidReason::DegenerateSpawnOverlap),
            SimulationOutcome::valid(false, 1500.0, 4300.0, 440.0), // 0+1+1+1 = 3
            SimulationOutcome::valid(false, 700.0, 1000.0, 100.0), // 0+4+4+4 = 12
            SimulationOutcome::invalid(InvalidReason::NoInteraction),
        ];
        let items: Vec<_> = raw.into_iter().map(scored).collect();
        let s = generation_stats(0, items.iter().map(|(o, r)| (o, r)));
        let totals = [22, 9, 6, 0, -1, 20, -1, 3, 12, -1];
        assert_eq!(s.rl_values, totals);
        assert_eq!(s.rl_mean, Some((22.0 + 9.0 + 6.0 + 0.0 + 20.0 + 3.0 + 12.0) / 7.0));
        assert_eq!(s.nc, 2);
        assert_eq!(s.nis, 3);
        let mdg = (120.0 + 900.0 + 1200.0 + 2000.0 + 300.0 + 1500.0 + 700.0) / 7.0;
        let mdec = (900.0 + 1200.0 + 2000.0 + 1500.0 + 700.0) / 5.0;
        assert!((s.mdg_mean_cm.unwrap() - mdg).abs() < 1e-9);
        assert!((s.mdec_mean_cm.unwrap() - mdec).abs() < 1e-9);
    }
}
