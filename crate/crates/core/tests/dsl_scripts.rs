use std::fs;
use std::path::PathBuf;

use ccsearch::scenario_dsl::{compile, format, parse};
use ccsearch::scenario_model::{template_for, RangeSet, ScenarioId};
use ccsearch::simulator::SimulationConfig;

fn script(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scripts").join(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn shipped_scripts_compile_to_their_templates() {
    for (file, id) in [
        ("a.ccs", ScenarioId::A),
        ("b.ccs", ScenarioId::B),
        ("c.ccs", ScenarioId::C),
        ("d.ccs", ScenarioId::D),
        ("e.ccs", ScenarioId::E),
        ("f.ccs", ScenarioId::F),
    ] {
        let ast = parse(&script(file)).unwrap_or_else(|d| panic!("{file}: {d:?}"));
        let (template, ranges, sim) = compile(&ast).unwrap();
        assert_eq!(template, template_for(&id).unwrap(), "{file}");
        assert_eq!(ranges, RangeSet::default(), "{file}");
        assert_eq!(sim, SimulationConfig::default(), "{file}");
        assert_eq!(parse(&format(&ast)).unwrap(), ast, "{file}");
    }
}

#[test]
fn canonical_text_of_script_a() {
    let ast = parse(&script("a.ccs")).unwrap();
    assert_eq!(
        format(&ast),
        "scenario A\nlayout two_by_two\nego crosses\nadversary opposite turns left\n"
    );
}

#[test]
fn canonical_text_of_script_f() {
    let ast = parse(&script("f.ccs")).unwrap();
    let expected = "\
scenario F
layout three_lane
ego turns left
adversary perpendicular crosses
param EGO_INIT_DIST in [0, 150] m
param EGO_SPEED in [5, 80] kmh
param EGO_BRAKE in [0, 1]
param ADV_INIT_DIST in [0, 150] m
param ADV_SPEED in [5, 80] kmh
param SAFETY_DIST in [0, 20] m
param CRASH_DIST in [0, 5] m
sim timestep 0.05
sim horizon 20
";
    assert_eq!(format(&ast), expected);
}
