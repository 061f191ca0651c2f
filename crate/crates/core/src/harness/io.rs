use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Deserialize;

use super::{runtime, Result};
use crate::analysis::GenerationStats;
use crate::fitness::RiskScore;
use crate::scenario_model::Genome;
use crate::simulator::{InvalidReason, SimulationOutcome};

pub const SIMULATIONS_FILE: &str = "simulations.csv";
pub const GENERATION_STATS_FILE: &str = "generation_stats.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub(crate) const SIMULATION_HEADER: [&str; 24] = [
    "scenario",
    "method",
    "repetition",
    "generation",
    "individual",
    "ego_init_dist",
    "ego_speed",
    "ego_brake",
    "adv_init_dist",
    "adv_speed",
    "safety_dist",
    "crash_dist",
    "valid",
    "invalid_reason",
    "collision",
    "md_cm",
    "d_ms_cm",
    "ttc_ms_cs",
    "risk_total",
    "risk_c",
    "risk_md",
    "risk_dms",
    "risk_ttc",
    "wall_ms",
];

const STATS_HEADER: [&str; 10] = [
    "scenario",
    "method",
    "repetition",
    "generation",
    "population",
    "rl_mean",
    "nc",
    "mdg_cm",
    "mdec_cm",
    "nis",
];

/// Shortest text that parses back to the same value; empty for `None`.
pub(crate) fn num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One line of `simulations.csv`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SimulationRow {
    pub scenario: String,
    pub method: String,
    pub repetition: usize,
    pub generation: usize,
    pub individual: usize,
    pub ego_init_dist: f64,
    pub ego_speed: f64,
    pub ego_brake: f64,
    pub adv_init_dist: f64,
    pub adv_speed: f64,
    pub safety_dist: f64,
    pub crash_dist: f64,
    pub valid: bool,
    pub invalid_reason: Option<String>,
    pub collision: bool,
    pub md_cm: Option<f64>,
    pub d_ms_cm: Option<f64>,
    pub ttc_ms_cs: Option<f64>,
    pub risk_total: i32,
    pub risk_c: u8,
    pub risk_md: u8,
    pub risk_dms: u8,
    pub risk_ttc: u8,
    pub wall_ms: Option<f64>,
}

impl SimulationRow {
    pub fn genome(&self) -> Genome {
        Genome::from_array([
            self.ego_init_dist,
            self.ego_speed,
            self.ego_brake,
            self.adv_init_dist,
            self.adv_speed,
            self.safety_dist,
            self.crash_dist,
        ])
    }

    /// The outcome without its trace.
    pub fn outcome(&self) -> SimulationOutcome {
        let reason = match self.invalid_reason.as_deref() {
            Some("no_interaction") => Some(InvalidReason::NoInteraction),
            Some("degenerate_spawn_overlap") => Some(InvalidReason::DegenerateSpawnOverlap),
            _ => None,
        };
        SimulationOutcome {
            valid: self.valid,
            invalid_reason: reason,
            collision: self.collision,
            md_cm: self.md_cm,
            d_ms_cm: self.d_ms_cm,
            ttc_ms_cs: self.ttc_ms_cs,
            trace: Vec::new(),
        }
    }

    pub fn score(&self) -> RiskScore {
        RiskScore {
            total: self.risk_total,
            c: self.risk_c,
            md: self.risk_md,
            d_ms: self.risk_dms,
            ttc_ms: self.risk_ttc,
        }
    }
}

pub(crate) struct RowKey<'a> {
    pub scenario: &'a str,
    pub method: &'a str,
    pub repetition: usize,
}

pub(crate) struct CsvSinks {
    sims: csv::Writer<BufWriter<File>>,
    stats: csv::Writer<BufWriter<File>>,
    pub rows: usize,
    pub stats_rows: usize,
}

impl CsvSinks {
    pub fn create(dir: &Path) -> Result<Self> {
        let open = |name: &str| -> Result<csv::Writer<BufWriter<File>>> {
            let path = dir.join(name);
            let f = File::create(&path).map_err(|e| runtime(path.display(), e))?;
            Ok(csv::Writer::from_writer(BufWriter::new(f)))
        };
        let mut sinks = Self {
            sims: open(SIMULATIONS_FILE)?,
            stats: open(GENERATION_STATS_FILE)?,
            rows: 0,
            stats_rows: 0,
        };
        sinks.sims.write_record(SIMULATION_HEADER).map_err(|e| runtime(SIMULATIONS_FILE, e))?;
        sinks.stats.write_record(STATS_HEADER).map_err(|e| runtime(GENERATION_STATS_FILE, e))?;
        Ok(sinks)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn simulation(
        &mut self,
        key: &RowKey<'_>,
        generation: usize,
        individual: usize,
        genome: &Genome,
        outcome: &SimulationOutcome,
        score: &RiskScore,
        wall_ms: Option<f64>,
    ) -> Result<()> {
        let mut rec: Vec<String> = vec![
            key.scenario.to_string(),
            key.method.to_string(),
            key.repetition.to_string(),
            generation.to_string(),
            individual.to_string(),
        ];
        rec.extend(genome.to_array().iter().map(|v| v.to_string()));
        rec.extend([
            outcome.valid.to_string(),
            outcome.invalid_reason.map(|r| r.as_str().to_string()).unwrap_or_default(),
            outcome.collision.to_string(),
            num(outcome.md_cm),
            num(outcome.d_ms_cm),
            num(outcome.ttc_ms_cs),
            score.total.to_string(),
            score.c.to_string(),
            score.md.to_string(),
            score.d_ms.to_string(),
            score.ttc_ms.to_string(),
            num(wall_ms),
        ]);
        self.sims.write_record(&rec).map_err(|e| runtime(SIMULATIONS_FILE, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn stats(&mut self, key: &RowKey<'_>, s: &GenerationStats) -> Result<()> {
        self.stats
            .write_record([
                key.scenario.to_string(),
                key.method.to_string(),
                key.repetition.to_string(),
                s.generation.to_string(),
                s.population.to_string(),
                num(s.rl_mean),
                s.nc.to_string(),
                num(s.mdg_mean_cm),
                num(s.mdec_mean_cm),
                s.nis.to_string(),
            ])
            .map_err(|e| runtime(GENERATION_STATS_FILE, e))?;
        self.stats_rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.sims.flush().map_err(|e| runtime(SIMULATIONS_FILE, e))?;
        self.stats.flush().map_err(|e| runtime(GENERATION_STATS_FILE, e))?;
        Ok(())
    }
}

pub fn read_simulations(path: &Path) -> Result<Vec<SimulationRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| runtime(path.display(), e))?;
    let headers = reader.headers().map_err(|e| runtime(path.display(), e))?.clone();
    if headers.iter().ne(SIMULATION_HEADER) {
        return Err(runtime(path.display(), "unexpected column layout"));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| runtime(format!("{} row {}", path.display(), i + 2), e)))
        .collect()
}
