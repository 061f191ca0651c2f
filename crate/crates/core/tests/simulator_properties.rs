use ccsearch::geometry::Vec2;
use ccsearch::rng::{stream, Domain};
use ccsearch::scenario_model::{template_for, RangeSet, ScenarioId};
use ccsearch::simulator::{build_paths, run, run_with_paths, SimulationConfig, TraceMode};

fn probe_genomes(n: usize) -> Vec<ccsearch::scenario_model::Genome> {
    let ranges = RangeSet::default();
    (0..n)
        .map(|i| ranges.sample(&mut stream(2024, Domain::RandomBaseline, 99, i as u64)))
        .collect()
}

#[test]
fn paths_meet_inside_the_conflict_zone() {
    for id in ScenarioId::NAMED {
        let t = template_for(&id).unwrap();
        let p = build_paths(&t);
        let center = t.geometry.conflict_zone_center;
        let half = t.geometry.lane_width / 2.0;
        let near = |path: &ccsearch::geometry::PathDef| -> Vec<Vec2> {
            let n = (path.total_length() / 0.01) as usize;
            (0..=n)
                .map(|k| path.position(k as f64 * 0.01))
                .filter(|q| q.dist(center) < 4.0 * t.geometry.lane_width)
                .collect()
        };
        let (a, b) = (near(&p.ego), near(&p.adv));
        let mut best = f64::INFINITY;
        for x in &a {
            for y in &b {
                best = best.min(x.dist(*y));
            }
        }
        assert!(best < 1.0, "{id}: closest sampled approach {best}");
        for (role, pts) in [("ego", &a), ("adv", &b)] {
            let d = pts.iter().map(|q| q.dist(center)).fold(f64::INFINITY, f64::min);
            assert!(d < half, "{id} {role} misses the conflict zone by {d}");
        }
    }
}

#[test]
fn halving_the_timestep_barely_moves_md() {
    let coarse = SimulationConfig::default();
    let fine = SimulationConfig {
        timestep: coarse.timestep / 2.0,
        ..coarse
    };
    let mut compared = 0;
    for id in ScenarioId::NAMED {
        let paths = build_paths(&template_for(&id).unwrap());
        for g in probe_genomes(40) {
            let a = run_with_paths(&paths, &g, &coarse, TraceMode::Off);
            let b = run_with_paths(&paths, &g, &fine, TraceMode::Off);
            if let (Some(x), Some(y)) = (a.md_cm, b.md_cm) {
                assert!((x - y).abs() < 5.0, "{id} {g:?}: md {x} vs {y}");
                compared += 1;
            }
        }
    }
    assert!(compared > 100, "probe set too sparse: {compared}");
}

#[test]
fn outcomes_respect_their_invariants() {
    let cfg = SimulationConfig::default();
    for id in ScenarioId::NAMED {
        let t = template_for(&id).unwrap();
        for g in probe_genomes(60) {
            let o = run(&t, &g, &cfg);
            if !o.valid {
                assert!(!o.collision);
                assert!(o.md_cm.is_none() && o.d_ms_cm.is_none() && o.ttc_ms_cs.is_none());
                continue;
            }
            let md = o.md_cm.unwrap();
            assert!(md >= 0.0);
            let touched = o.trace.iter().any(|r| r.separation <= g.crash_dist);
            // Contact may fall between samples; the outcome catches it from
            // the in-step minimum.
            assert!(!touched || o.collision, "{id}: sampled contact not flagged");
            if o.collision {
                assert!(md <= g.crash_dist * 100.0 + 1e-9);
            }
            // Ego never re-accelerates once it has slowed.
            for w in o.trace.windows(2) {
                if w[0].ego.speed < g.ego_speed / 3.6 - 1e-9 {
                    assert!(w[1].ego.speed <= w[0].ego.speed + 1e-12);
                }
                assert!(w[1].ego.speed >= 0.0);
            }
        }
    }
}

#[test]
fn runs_are_bit_identical() {
    let t = template_for(&ScenarioId::D).unwrap();
    for g in probe_genomes(10) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        ccsearch::simulator::write_trace_csv(&run(&t, &g, &SimulationConfig::default()).trace, &mut a).unwrap();
        ccsearch::simulator::write_trace_csv(&run(&t, &g, &SimulationConfig::default()).trace, &mut b).unwrap();
        assert_eq!(a, b);
    }
}
