//! Genetic algorithm over scenario genomes.
//!
//! Each new generation is filled one slot at a time. A uniform draw picks
//! the operator: elitism copies the best not-yet-copied valid individual,
//! single-point crossover breeds two tournament-selected parents, and
//! mutation redraws one gene of a tournament-selected subject. Individuals
//! scoring -1 never take part in any operator.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fitness::{risk_level, FitnessBands, RiskScore};
use crate::rng::{self, Domain};
use crate::scenario_model::{clamp_genome, Genome, RangeSet};
use crate::simulator::SimulationOutcome;

pub const GENES: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaConfigError {
    #[error("operator probabilities must lie in [0, 1] and sum to 1 (got {0}, {1}, {2})")]
    Probabilities(f64, f64, f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub mu_s: f64,
    pub mu_c: f64,
    pub mu_m: f64,
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub tournament_size: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            mu_s: 0.1,
            mu_c: 0.8,
            mu_m: 0.1,
            population_size: 100,
            generations: 30,
            seed: 42,
            tournament_size: 2,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaConfigError> {
        let probs = [self.mu_s, self.mu_c, self.mu_m];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(GaConfigError::Probabilities(self.mu_s, self.mu_c, self.mu_m));
        }
        if self.population_size == 0 {
            return Err(GaConfigError::NonPositive("population_size"));
        }
        if self.generations == 0 {
            return Err(GaConfigError::NonPositive("generations"));
        }
        if self.tournament_size == 0 {
            return Err(GaConfigError::NonPositive("tournament_size"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Elitism,
    Crossover,
    Mutation,
}

/// Maps a uniform draw onto an operator: `[0, mu_s]` elitism,
/// `]mu_s, mu_s + mu_c[` crossover, `[mu_s + mu_c, 1]` mutation.
pub fn select_operator(u: f64, cfg: &GaConfig) -> Operator {
    if u <= cfg.mu_s {
        Operator::Elitism
    } else if u < cfg.mu_s + cfg.mu_c {
        Operator::Crossover
    } else {
        Operator::Mutation
    }
}

/// Where an individual's outcome is stored: `(generation, index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeRef {
    pub generation: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedIndividual {
    pub genome: Genome,
    pub score: RiskScore,
    pub outcome_ref: OutcomeRef,
}

/// Highest-scoring valid individual not yet in `chosen` (lowest index on
/// ties). The pick is added to `chosen`. `None` when the pool is exhausted.
pub fn elitism_pick(prev: &[EvaluatedIndividual], chosen: &mut BTreeSet<usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, ind) in prev.iter().enumerate() {
        if !ind.score.is_valid() || chosen.contains(&i) {
            continue;
        }
        if best.is_none_or(|b| ind.score.total > prev[b].score.total) {
            best = Some(i);
        }
    }
    if let Some(i) = best {
        chosen.insert(i);
    }
    best
}

/// Tournament with replacement over `pool` (indices into `prev`).
pub fn tournament<R: Rng + ?Sized>(prev: &[EvaluatedIndividual], pool: &[usize], size: usize, rng: &mut R) -> usize {
    assert!(!pool.is_empty(), "tournament over an empty pool");
    let mut best = pool[rng.gen_range(0..pool.len())];
    for _ in 1..size {
        let c = pool[rng.gen_range(0..pool.len())];
        let (sc, sb) = (prev[c].score.total, prev[best].score.total);
        if sc > sb || (sc == sb && c < best) {
            best = c;
        }
    }
    best
}

/// Single-point crossover; genes `[0, cut)` come from the first parent.
///
/// # Panics
/// If `cut` is not in `1..=6`.
pub fn crossover(p1: &Genome, p2: &Genome, cut: usize, ranges: &RangeSet) -> (Genome, Genome) {
    assert!((1..GENES).contains(&cut), "cut point {cut} outside 1..=6");
    let (a, b) = (p1.to_array(), p2.to_array());
    let mut c1 = b;
    let mut c2 = a;
    c1[..cut].copy_from_slice(&a[..cut]);
    c2[..cut].copy_from_slice(&b[..cut]);
    (
        clamp_genome(&Genome::from_array(c1), ranges),
        clamp_genome(&Genome::from_array(c2), ranges),
    )
}

/// Redraws one uniformly chosen gene from its range.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, ranges: &RangeSet, rng: &mut R) -> Genome {
    let idx = rng.gen_range(0..GENES);
    let mut v = g.to_array();
    v[idx] = ranges.as_slice()[idx].sample(rng);
    Genome::from_array(v)
}

/// A bred population plus how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub genomes: Vec<Genome>,
    pub operators: Vec<Operator>,
    /// True when the previous generation had no valid individual and this
    /// one was sampled at random instead.
    pub resampled: bool,
    /// Dispatch-stream position after breeding, `None` when resampled.
    pub checkpoint: Option<RngCheckpoint>,
}

/// Builds generation `generation` from the evaluated previous one.
pub fn next_generation(
    prev: &[EvaluatedIndividual],
    cfg: &GaConfig,
    ranges: &RangeSet,
    generation: usize,
) -> Offspring {
    let n = cfg.population_size;
    let g = generation as u64;
    let pool: Vec<usize> = (0..prev.len()).filter(|&i| prev[i].score.is_valid()).collect();
    if pool.is_empty() {
        let genomes = (0..n)
            .map(|i| ranges.sample(&mut rng::stream(cfg.seed, Domain::GaResample, g, i as u64)))
            .collect();
        return Offspring {
            genomes,
            operators: Vec::new(),
            resampled: true,
            checkpoint: None,
        };
    }

    let mut dispatch = rng::stream(cfg.seed, Domain::GaDispatch, g, 0);
    let mut chosen = BTreeSet::new();
    let mut genomes = Vec::with_capacity(n);
    let mut operators = Vec::with_capacity(n);
    while genomes.len() < n {
        let slot = genomes.len() as u64;
        let mut rng = rng::stream(cfg.seed, Domain::GaIndividual, g, slot);
        let op = select_operator(dispatch.gen::<f64>(), cfg);
        match op {
            Operator::Elitism => match elitism_pick(prev, &mut chosen) {
                Some(i) => genomes.push(prev[i].genome),
                None if cfg.mu_c + cfg.mu_m == 0.0 => genomes.push(ranges.sample(&mut rng)),
                None => continue,
            },
            Operator::Crossover => {
                let a = tournament(prev, &pool, cfg.tournament_size, &mut rng);
                let b = tournament(prev, &pool, cfg.tournament_size, &mut rng);
                let cut = rng.gen_range(1..GENES);
                let (c1, c2) = crossover(&prev[a].genome, &prev[b].genome, cut, ranges);
                genomes.push(c1);
                if genomes.len() < n {
                    genomes.push(c2);
                    operators.push(op);
                }
            }
            Operator::Mutation => {
                let s = tournament(prev, &pool, cfg.tournament_size, &mut rng);
                genomes.push(mutate(&prev[s].genome, ranges, &mut rng));
            }
        }
        operators.push(op);
    }
    Offspring {
        genomes,
        operators,
        resampled: false,
        checkpoint: Some(RngCheckpoint {
            seed: cfg.seed,
            dispatch_stream: rng::stream_id(Domain::GaDispatch, g, 0),
            dispatch_words: dispatch.get_word_pos(),
        }),
    }
}

/// Evaluates a batch of genomes. Implementations may evaluate in parallel
/// but must return outcomes in input order.
pub trait Evaluator {
    fn evaluate(&self, genomes: &[Genome]) -> Vec<SimulationOutcome>;
}

impl<F> Evaluator for F
where
    F: Fn(&Genome) -> SimulationOutcome,
{
    fn evaluate(&self, genomes: &[Genome]) -> Vec<SimulationOutcome> {
        genomes.iter().map(self).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngCheckpoint {
    pub seed: u64,
    pub dispatch_stream: u64,
    /// Words consumed from the dispatch stream while breeding.
    pub dispatch_words: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub index: usize,
    pub individuals: Vec<EvaluatedIndividual>,
    pub outcomes: Vec<SimulationOutcome>,
    pub resampled: bool,
    pub checkpoint: Option<RngCheckpoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaHistory {
    pub generations: Vec<GenerationRecord>,
}

impl GaHistory {
    /// Number of generations that had to be resampled at random.
    pub fn resample_events(&self) -> usize {
        self.generations.iter().filter(|g| g.resampled).count()
    }
}

fn evaluate_generation<E: Evaluator + ?Sized>(
    index: usize,
    genomes: Vec<Genome>,
    bands: &FitnessBands,
    evaluator: &E,
) -> (Vec<EvaluatedIndividual>, Vec<SimulationOutcome>) {
    let outcomes = evaluator.evaluate(&genomes);
    assert_eq!(outcomes.len(), genomes.len(), "evaluator dropped outcomes");
    let individuals = genomes
        .into_iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(i, (genome, outcome))| EvaluatedIndividual {
            genome,
            score: risk_level(outcome, bands),
            outcome_ref: OutcomeRef {
                generation: index,
                index: i,
            },
        })
        .collect();
    (individuals, outcomes)
}

pub fn run_ga<E: Evaluator + ?Sized>(
    cfg: &GaConfig,
    ranges: &RangeSet,
    bands: &FitnessBands,
    evaluator: &E,
) -> GaHistory {
    let mut history = GaHistory::default();
    for gen in 0..cfg.generations {
        let (genomes, resampled, checkpoint) = match history.generations.last() {
            None => {
                let g0 = (0..cfg.population_size)
                    .map(|i| ranges.sample(&mut rng::stream(cfg.seed, Domain::GaInit, 0, i as u64)))
                    .collect();
                (g0, false, None)
            }
            Some(prev) => {
                let off = next_generation(&prev.individuals, cfg, ranges, gen);
                (off.genomes, off.resampled, off.checkpoint)
            }
        };
        let (individuals, outcomes) = evaluate_generation(gen, genomes, bands, evaluator);
        history.generations.push(GenerationRecord {
            index: gen,
            individuals,
            outcomes,
            resampled,
            checkpoint,
        });
    }
    history
}

/// Random-sampling baseline with the same shape as a GA run, drawn from
/// its own seed stream.
pub fn run_random_baseline<E: Evaluator + ?Sized>(
    cfg: &GaConfig,
    ranges: &RangeSet,
    bands: &FitnessBands,
    evaluator: &E,
) -> GaHistory {
    let mut history = GaHistory::default();
    for gen in 0..cfg.generations {
        let genomes = (0..cfg.population_size)
            .map(|i| ranges.sample(&mut rng::stream(cfg.seed, Domain::RandomBaseline, gen as u64, i as u64)))
            .collect();
        let (individuals, outcomes) = evaluate_generation(gen, genomes, bands, evaluator);
        history.generations.push(GenerationRecord {
            index: gen,
            individuals,
            outcomes,
            resampled: false,
            checkpoint: None,
        });
    }
    history
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_model::{Param, ParameterRange};
    use crate::simulator::InvalidReason;

    fn individual(i: usize, total: i32, genome: Genome) -> EvaluatedIndividual {
        EvaluatedIndividual {
            genome,
            score: if total < 0 {
                RiskScore::INVALID
            } else {
                RiskScore {
                    total,
                    c: 0,
                    md: 0,
                    d_ms: 0,
                    ttc_ms: 0,
                }
            },
            outcome_ref: OutcomeRef {
                generation: 0,
                index: i,
            },
        }
    }

    fn population(scores: &[i32]) -> Vec<EvaluatedIndividual> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let v = 10.0 + i as f64;
                individual(i, s, Genome::from_array([v, 5.0 + v, 0.5, v, 5.0 + v, 10.0, 1.0 + i as f64 * 0.1]))
            })
            .collect()
    }

    #[test]
    fn operator_intervals() {
        let cfg = GaConfig::default();
        assert_eq!(select_operator(0.05, &cfg), Operator::Elitism);
        assert_eq!(select_operator(0.1, &cfg), Operator::Elitism);
        assert_eq!(select_operator(0.5, &cfg), Operator::Crossover);
        assert_eq!(select_operator(0.95, &cfg), Operator::Mutation);
        assert_eq!(select_operator(0.9, &cfg), Operator::Mutation);
        assert_eq!(select_operator(1.0, &cfg), Operator::Mutation);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig {
            mu_c: 0.7,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn elitism_examples() {
        let prev = population(&[5, 12, 7]);
        let mut chosen = BTreeSet::new();
        assert_eq!(elitism_pick(&prev, &mut chosen), Some(1));
        assert_eq!(elitism_pick(&prev, &mut chosen), Some(2));
        let prev = population(&[9, 9]);
        assert_eq!(elitism_pick(&prev, &mut BTreeSet::new()), Some(0));
        let prev = population(&[-1, 3]);
        let mut chosen = BTreeSet::new();
        assert_eq!(elitism_pick(&prev, &mut chosen), Some(1));
        assert_eq!(elitism_pick(&prev, &mut chosen), None);
    }

    #[test]
    fn crossover_examples() {
        let ranges = RangeSet::default();
        let g = Genome::from_array([10.0, 20.0, 0.3, 40.0, 50.0, 6.0, 2.0]);
        assert_eq!(crossover(&g, &g, 3, &ranges), (g, g));

        let p1 = Genome::from_array([1.0, 10.0, 0.1, 2.0, 11.0, 1.0, 0.5]);
        let p2 = Genome::from_array([100.0, 70.0, 0.9, 120.0, 75.0, 19.0, 4.5]);
        let (c1, _) = crossover(&p1, &p2, 3, &ranges);
        assert_eq!(c1.to_array(), [1.0, 10.0, 0.1, 120.0, 75.0, 19.0, 4.5]);

        for cut in 1..GENES {
            let (c1, c2) = crossover(&p1, &p2, cut, &ranges);
            let (a, b, x, y) = (p1.to_array(), p2.to_array(), c1.to_array(), c2.to_array());
            for i in 0..GENES {
                let mut parents = [a[i], b[i]];
                let mut kids = [x[i], y[i]];
                parents.sort_by(f64::total_cmp);
                kids.sort_by(f64::total_cmp);
                assert_eq!(parents, kids, "cut {cut} gene {i}");
            }
        }
    }

    #[test]
    #[should_panic]
    fn crossover_rejects_cut_zero() {
        let g = Genome::from_array([1.0; 7]);
        crossover(&g, &g, 0, &RangeSet::default());
    }

    #[test]
    fn mutation_with_collapsed_ranges_is_identity() {
        let g = Genome::from_array([3.0, 30.0, 0.5, 3.0, 30.0, 3.0, 3.0]);
        let list: Vec<_> = Param::ALL
            .iter()
            .map(|&p| ParameterRange::new(p, g.get(p), g.get(p)).unwrap())
            .collect();
        let ranges = RangeSet::from_list(&list).unwrap();
        let mut r = rng::stream(5, Domain::GaIndividual, 0, 0);
        assert_eq!(mutate(&g, &ranges, &mut r), g);
    }

    #[test]
    fn mutation_is_deterministic_and_uniform_over_genes() {
        let ranges = RangeSet::default();
        let g = Genome::from_array([-1.0; 7]);
        let a = mutate(&g, &ranges, &mut rng::stream(5, Domain::GaIndividual, 0, 0));
        let b = mutate(&g, &ranges, &mut rng::stream(5, Domain::GaIndividual, 0, 0));
        assert_eq!(a, b);

        let n = 10_000;
        let mut counts = [0usize; GENES];
        let mut r = rng::stream(11, Domain::GaIndividual, 0, 0);
        for _ in 0..n {
            let m = mutate(&g, &ranges, &mut r).to_array();
            let changed: Vec<_> = (0..GENES).filter(|&i| m[i] != -1.0).collect();
            assert_eq!(changed.len(), 1);
            counts[changed[0]] += 1;
        }
        let p = 1.0 / GENES as f64;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn dispatch_frequencies_match_probabilities() {
        let cfg = GaConfig::default();
        let mut r = rng::stream(2024, Domain::GaDispatch, 0, 0);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[select_operator(r.gen(), &cfg) as usize] += 1;
        }
        for (c, p) in counts.iter().zip([cfg.mu_s, cfg.mu_c, cfg.mu_m]) {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn pure_elitism_copies_the_top_distinct_valid() {
        let cfg = GaConfig {
            mu_s: 1.0,
            mu_c: 0.0,
            mu_m: 0.0,
            population_size: 3,
            ..GaConfig::default()
        };
        let prev = population(&[4, -1, 9, 7, 2, 9]);
        let off = next_generation(&prev, &cfg, &RangeSet::default(), 1);
        assert_eq!(off.genomes, vec![prev[2].genome, prev[5].genome, prev[3].genome]);
    }

    #[test]
    fn pure_mutation_changes_at_most_one_gene() {
        let cfg = GaConfig {
            mu_s: 0.0,
            mu_c: 0.0,
            mu_m: 1.0,
            population_size: 50,
            ..GaConfig::default()
        };
        let prev = population(&[4, 1, 9, 7, 2, 9]);
        let off = next_generation(&prev, &cfg, &RangeSet::default(), 1);
        for g in &off.genomes {
            let close = prev.iter().any(|p| {
                let (a, b) = (p.genome.to_array(), g.to_array());
                (0..GENES).filter(|&i| a[i] != b[i]).count() <= 1
            });
            assert!(close);
        }
    }

    #[test]
    fn invalid_individuals_never_breed() {
        let mut prev = population(&[3, -1, 8, -1, 5, 6, 1, -1]);
        for p in prev.iter_mut().filter(|p| !p.score.is_valid()) {
            p.genome = Genome::from_array([123.25, 77.5, 0.875, 123.25, 77.5, 17.5, 4.875]);
        }
        let cfg = GaConfig {
            population_size: 200,
            ..GaConfig::default()
        };
        let off = next_generation(&prev, &cfg, &RangeSet::default(), 1);
        assert_eq!(off.genomes.len(), 200);
        let marked = prev[1].genome.to_array();
        for g in &off.genomes {
            // Mutation can only redraw one gene; crossover only mixes valid parents.
            let hits = g.to_array().iter().zip(&marked).filter(|(a, b)| a == b).count();
            assert!(hits <= 1, "{g:?}");
        }
    }

    #[test]
    fn next_generation_is_reproducible() {
        let prev = population(&[3, 12, 8, -1, 5, 6, 1, 22]);
        let cfg = GaConfig {
            population_size: 40,
            ..GaConfig::default()
        };
        let a = next_generation(&prev, &cfg, &RangeSet::default(), 4);
        let b = next_generation(&prev, &cfg, &RangeSet::default(), 4);
        assert_eq!(a, b);
        assert_eq!(a.operators.len(), a.genomes.len());
    }

    fn stub(outcome: SimulationOutcome) -> impl Fn(&Genome) -> SimulationOutcome {
        move |_| outcome.clone()
    }

    #[test]
    fn single_generation_is_the_random_seed_population() {
        let cfg = GaConfig {
            generations: 1,
            population_size: 8,
            ..GaConfig::default()
        };
        let ranges = RangeSet::default();
        let h = run_ga(&cfg, &ranges, &FitnessBands::default(), &stub(SimulationOutcome::valid(false, 900.0, 4000.0, 400.0)));
        assert_eq!(h.generations.len(), 1);
        for (i, ind) in h.generations[0].individuals.iter().enumerate() {
            let expect = ranges.sample(&mut rng::stream(cfg.seed, Domain::GaInit, 0, i as u64));
            assert_eq!(ind.genome, expect);
        }
    }

    #[test]
    fn constant_evaluator_gives_constant_scores() {
        let cfg = GaConfig {
            generations: 5,
            population_size: 10,
            ..GaConfig::default()
        };
        let h = run_ga(&cfg, &RangeSet::default(), &FitnessBands::default(), &stub(SimulationOutcome::valid(false, 900.0, 4000.0, 400.0)));
        for g in &h.generations {
            assert_eq!(g.individuals.len(), 10);
            let mean = g.individuals.iter().map(|i| i.score.total).sum::<i32>() as f64 / 10.0;
            assert_eq!(mean, 8.0);
        }
    }

    #[test]
    fn all_invalid_generation_is_resampled() {
        let cfg = GaConfig {
            generations: 3,
            population_size: 6,
            ..GaConfig::default()
        };
        let h = run_ga(&cfg, &RangeSet::default(), &FitnessBands::default(), &stub(SimulationOutcome::invalid(InvalidReason::NoInteraction)));
        assert_eq!(h.resample_events(), 2);
        assert!(h.generations.iter().all(|g| g.individuals.len() == 6));
    }

    #[test]
    fn random_baseline_uses_its_own_stream() {
        let cfg = GaConfig {
            generations: 2,
            population_size: 4,
            ..GaConfig::default()
        };
        let eval = stub(SimulationOutcome::valid(true, 100.0, 100.0, 100.0));
        let ga = run_ga(&cfg, &RangeSet::default(), &FitnessBands::default(), &eval);
        let rnd = run_random_baseline(&cfg, &RangeSet::default(), &FitnessBands::default(), &eval);
        assert_ne!(ga.generations[0].individuals[0].genome, rnd.generations[0].individuals[0].genome);
        assert_eq!(rnd, run_random_baseline(&cfg, &RangeSet::default(), &FitnessBands::default(), &eval));
    }
}
