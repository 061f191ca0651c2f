//! Scenario genome, parameter ranges and the six intersection templates.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{closest_pair, Vec2};
use crate::simulator::nominal_paths;

/// Upper bound applied to both initial distances, in metres.
pub const INIT_DIST_CAP: f64 = 150.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("missing parameter range for {0}")]
    MissingParameter(Param),
    #[error("duplicate parameter range for {0}")]
    DuplicateParameter(Param),
    #[error("invalid range for {param}: [{low}, {high}]")]
    InvalidRange { param: Param, low: f64, high: f64 },
    #[error("unit {unit} does not match parameter {param}")]
    UnitMismatch { param: Param, unit: Unit },
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("vehicle paths never come within {limit} m of each other (closest {closest:.2} m)")]
    NoConflict { closest: f64, limit: f64 },
    #[error("genome field {param} = {value} outside legal bounds")]
    IllegalGenome { param: Param, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "km_per_h")]
    KmPerH,
    #[serde(rename = "meters")]
    Meters,
    #[serde(rename = "dimensionless")]
    Dimensionless,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::KmPerH => "km_per_h",
            Unit::Meters => "meters",
            Unit::Dimensionless => "dimensionless",
        })
    }
}

/// The seven genes, in genome order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "EGO_INIT_DIST")]
    EgoInitDist,
    #[serde(rename = "EGO_SPEED")]
    EgoSpeed,
    #[serde(rename = "EGO_BRAKE")]
    EgoBrake,
    #[serde(rename = "ADV_INIT_DIST")]
    AdvInitDist,
    #[serde(rename = "ADV_SPEED")]
    AdvSpeed,
    #[serde(rename = "SAFETY_DIST")]
    SafetyDist,
    #[serde(rename = "CRASH_DIST")]
    CrashDist,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::EgoInitDist,
        Param::EgoSpeed,
        Param::EgoBrake,
        Param::AdvInitDist,
        Param::AdvSpeed,
        Param::SafetyDist,
        Param::CrashDist,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::EgoInitDist => "EGO_INIT_DIST",
            Param::EgoSpeed => "EGO_SPEED",
            Param::EgoBrake => "EGO_BRAKE",
            Param::AdvInitDist => "ADV_INIT_DIST",
            Param::AdvSpeed => "ADV_SPEED",
            Param::SafetyDist => "SAFETY_DIST",
            Param::CrashDist => "CRASH_DIST",
        }
    }

    pub fn unit(self) -> Unit {
        match self {
            Param::EgoSpeed | Param::AdvSpeed => Unit::KmPerH,
            Param::EgoBrake => Unit::Dimensionless,
            _ => Unit::Meters,
        }
    }

    /// Legal envelope of the gene; the default search range.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Param::EgoInitDist | Param::AdvInitDist => (0.0, INIT_DIST_CAP),
            Param::EgoSpeed | Param::AdvSpeed => (5.0, 80.0),
            Param::EgoBrake => (0.0, 1.0),
            Param::SafetyDist => (0.0, 20.0),
            Param::CrashDist => (0.0, 5.0),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Param::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ModelError::UnknownParameter(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterRange {
    pub param: Param,
    pub low: f64,
    pub high: f64,
    pub unit: Unit,
}

impl ParameterRange {
    pub fn new(param: Param, low: f64, high: f64) -> Result<Self, ModelError> {
        let r = Self {
            param,
            low,
            high,
            unit: param.unit(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn default_for(param: Param) -> Self {
        let (low, high) = param.bounds();
        Self {
            param,
            low,
            high,
            unit: param.unit(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.low.is_finite() && self.high.is_finite()) || self.low > self.high {
            return Err(ModelError::InvalidRange {
                param: self.param,
                low: self.low,
                high: self.high,
            });
        }
        if self.unit != self.param.unit() {
            return Err(ModelError::UnitMismatch {
                param: self.param,
                unit: self.unit,
            });
        }
        Ok(())
    }

    /// Whether the range lies inside the gene's legal envelope.
    pub fn within_bounds(&self) -> bool {
        let (lo, hi) = self.param.bounds();
        lo <= self.low && self.high <= hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.low, self.high)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.low + (self.high - self.low) * u
    }
}

/// A validated set of exactly one range per gene, indexed in genome order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParameterRange>", into = "Vec<ParameterRange>")]
pub struct RangeSet([ParameterRange; 7]);

impl RangeSet {
    pub fn from_list(ranges: &[ParameterRange]) -> Result<Self, ModelError> {
        let mut slots: [Option<ParameterRange>; 7] = [None; 7];
        for r in ranges {
            r.validate()?;
            let slot = &mut slots[r.param.index()];
            if slot.is_some() {
                return Err(ModelError::DuplicateParameter(r.param));
            }
            *slot = Some(*r);
        }
        let mut out = [ParameterRange::default_for(Param::EgoInitDist); 7];
        for p in Param::ALL {
            out[p.index()] = slots[p.index()].ok_or(ModelError::MissingParameter(p))?;
        }
        Ok(Self(out))
    }

    /// Defaults, with the given ranges overriding individual genes.
    pub fn with_overrides(overrides: &[ParameterRange]) -> Result<Self, ModelError> {
        let mut set = Self::default();
        let mut seen = [false; 7];
        for r in overrides {
            r.validate()?;
            if std::mem::replace(&mut seen[r.param.index()], true) {
                return Err(ModelError::DuplicateParameter(r.param));
            }
            set.0[r.param.index()] = *r;
        }
        Ok(set)
    }

    pub fn get(&self, p: Param) -> &ParameterRange {
        &self.0[p.index()]
    }

    pub fn as_slice(&self) -> &[ParameterRange] {
        &self.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        let mut values = [0.0; 7];
        for (v, r) in values.iter_mut().zip(&self.0) {
            *v = r.sample(rng);
        }
        Genome::from_array(values)
    }
}

impl Default for RangeSet {
    fn default() -> Self {
        Self(Param::ALL.map(ParameterRange::default_for))
    }
}

impl TryFrom<Vec<ParameterRange>> for RangeSet {
    type Error = ModelError;
    fn try_from(v: Vec<ParameterRange>) -> Result<Self, Self::Error> {
        Self::from_list(&v)
    }
}

impl From<RangeSet> for Vec<ParameterRange> {
    fn from(r: RangeSet) -> Self {
        r.0.to_vec()
    }
}

/// One scenario instance. Speeds in km/h, distances in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub ego_init_dist: f64,
    pub ego_speed: f64,
    pub ego_brake: f64,
    pub adv_init_dist: f64,
    pub adv_speed: f64,
    pub safety_dist: f64,
    pub crash_dist: f64,
}

impl Genome {
    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            ego_init_dist: v[0],
            ego_speed: v[1],
            ego_brake: v[2],
            adv_init_dist: v[3],
            adv_speed: v[4],
            safety_dist: v[5],
            crash_dist: v[6],
        }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.ego_init_dist,
            self.ego_speed,
            self.ego_brake,
            self.adv_init_dist,
            self.adv_speed,
            self.safety_dist,
            self.crash_dist,
        ]
    }

    pub fn get(&self, p: Param) -> f64 {
        self.to_array()[p.index()]
    }

    /// Checks every gene against its legal envelope.
    pub fn check(&self) -> Result<(), ModelError> {
        for p in Param::ALL {
            let v = self.get(p);
            let (lo, hi) = p.bounds();
            if !(lo..=hi).contains(&v) {
                return Err(ModelError::IllegalGenome { param: p, value: v });
            }
        }
        Ok(())
    }
}

pub fn sample_random_genome<R: Rng + ?Sized>(
    ranges: &[ParameterRange],
    rng: &mut R,
) -> Result<Genome, ModelError> {
    Ok(RangeSet::from_list(ranges)?.sample(rng))
}

pub fn clamp_genome(g: &Genome, ranges: &RangeSet) -> Genome {
    let mut v = g.to_array();
    for (x, r) in v.iter_mut().zip(ranges.as_slice()) {
        *x = r.clamp(*x);
    }
    Genome::from_array(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManeuverKind {
    CrossStraight,
    LeftTurn,
    RightTurn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneLayout {
    TwoByTwo,
    ThreeLane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    SameRoadOpposite,
    Perpendicular,
}

/// The arm a vehicle enters the intersection from. The ego always enters
/// from the south heading north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    South,
    North,
    East,
    West,
}

impl Arm {
    /// Rotation taking the canonical south approach onto this arm.
    pub fn rotation(self) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            Arm::South => 0.0,
            Arm::North => PI,
            Arm::East => FRAC_PI_2,
            Arm::West => -FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    A,
    B,
    C,
    D,
    E,
    F,
    Custom(String),
}

impl ScenarioId {
    pub const NAMED: [ScenarioId; 6] = [
        ScenarioId::A,
        ScenarioId::B,
        ScenarioId::C,
        ScenarioId::D,
        ScenarioId::E,
        ScenarioId::F,
    ];

    pub fn is_named(&self) -> bool {
        !matches!(self, ScenarioId::Custom(_))
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioId::A => f.write_str("A"),
            ScenarioId::B => f.write_str("B"),
            ScenarioId::C => f.write_str("C"),
            ScenarioId::D => f.write_str("D"),
            ScenarioId::E => f.write_str("E"),
            ScenarioId::F => f.write_str("F"),
            ScenarioId::Custom(name) => f.write_str(name),
        }
    }
}

impl FromStr for ScenarioId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ScenarioId::A),
            "B" => Ok(ScenarioId::B),
            "C" => Ok(ScenarioId::C),
            "D" => Ok(ScenarioId::D),
            "E" => Ok(ScenarioId::E),
            "F" => Ok(ScenarioId::F),
            _ => Err(ModelError::UnknownScenario(s.to_string())),
        }
    }
}

/// Overridable intersection dimensions, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    pub lane_width: f64,
    pub arm_length: f64,
    pub turn_radius_left: f64,
    pub turn_radius_right: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            lane_width: 3.5,
            arm_length: 160.0,
            turn_radius_left: 10.5,
            turn_radius_right: 6.0,
        }
    }
}

impl GeometryParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            self.lane_width,
            self.arm_length,
            self.turn_radius_left,
            self.turn_radius_right,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ModelError::InvalidGeometry("all lengths must be positive".into()));
        }
        if self.turn_radius_right >= self.turn_radius_left {
            return Err(ModelError::InvalidGeometry(
                "right-turn radius must be smaller than left-turn radius".into(),
            ));
        }
        if self.arm_length <= self.turn_radius_left + 2.0 * self.lane_width {
            return Err(ModelError::InvalidGeometry(
                "arms too short for the turn radii".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionLayout {
    pub lane_width: f64,
    pub arm_length: f64,
    pub turn_radius_left: f64,
    pub turn_radius_right: f64,
    /// Midpoint of the closest approach of the two nominal paths.
    pub conflict_zone_center: Vec2,
}

impl IntersectionLayout {
    pub fn params(&self) -> GeometryParams {
        GeometryParams {
            lane_width: self.lane_width,
            arm_length: self.arm_length,
            turn_radius_left: self.turn_radius_left,
            turn_radius_right: self.turn_radius_right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub id: ScenarioId,
    pub lane_layout: LaneLayout,
    pub ego_maneuver: ManeuverKind,
    pub adv_maneuver: ManeuverKind,
    pub adv_approach: Approach,
    pub geometry: IntersectionLayout,
}

impl ScenarioTemplate {
    pub fn new(
        id: ScenarioId,
        lane_layout: LaneLayout,
        ego_maneuver: ManeuverKind,
        adv_maneuver: ManeuverKind,
        adv_approach: Approach,
        params: GeometryParams,
    ) -> Result<Self, ModelError> {
        params.validate()?;
        let adv_arm = adversary_arm(adv_approach, ego_maneuver);
        let (ego, adv) = nominal_paths(&params, lane_layout, ego_maneuver, adv_maneuver, adv_arm);
        let reach = params.arm_length.min(4.0 * params.lane_width + params.turn_radius_left + 5.0);
        let limit = params.lane_width / 2.0;
        let (sa, sb, d) = closest_pair(&ego, &adv, Vec2::default(), reach, 0.01, 1e-3)
            .ok_or(ModelError::NoConflict {
                closest: f64::INFINITY,
                limit,
            })?;
        if d >= limit {
            return Err(ModelError::NoConflict { closest: d, limit });
        }
        let center = ego.position(sa).lerp(adv.position(sb), 0.5);
        Ok(Self {
            id,
            lane_layout,
            ego_maneuver,
            adv_maneuver,
            adv_approach,
            geometry: IntersectionLayout {
                lane_width: params.lane_width,
                arm_length: params.arm_length,
                turn_radius_left: params.turn_radius_left,
                turn_radius_right: params.turn_radius_right,
                conflict_zone_center: center,
            },
        })
    }

    pub fn adv_arm(&self) -> Arm {
        adversary_arm(self.adv_approach, self.ego_maneuver)
    }
}

/// Opposite approach comes from the north. A perpendicular adversary comes
/// from the ego's left (west) when the ego turns right, so that it crosses
/// the lane the ego turns into; otherwise it comes from the ego's right.
pub fn adversary_arm(approach: Approach, ego: ManeuverKind) -> Arm {
    match (approach, ego) {
        (Approach::SameRoadOpposite, _) => Arm::North,
        (Approach::Perpendicular, ManeuverKind::RightTurn) => Arm::West,
        (Approach::Perpendicular, _) => Arm::East,
    }
}

/// Maneuver table of the six intersection scenarios:
/// `(layout, ego, adversary, approach)`.
pub fn template_spec(id: &ScenarioId) -> Option<(LaneLayout, ManeuverKind, ManeuverKind, Approach)> {
    use Approach::*;
    use LaneLayout::*;
    use ManeuverKind::*;
    Some(match id {
        ScenarioId::A => (TwoByTwo, CrossStraight, LeftTurn, SameRoadOpposite),
        ScenarioId::B => (TwoByTwo, LeftTurn, CrossStraight, Perpendicular),
        ScenarioId::C => (TwoByTwo, CrossStraight, LeftTurn, Perpendicular),
        ScenarioId::D => (TwoByTwo, RightTurn, LeftTurn, SameRoadOpposite),
        ScenarioId::E => (TwoByTwo, RightTurn, CrossStraight, Perpendicular),
        ScenarioId::F => (ThreeLane, LeftTurn, CrossStraight, Perpendicular),
        ScenarioId::Custom(_) => return None,
    })
}

/// Template with explicit geometry.
pub fn template_with_geometry(
    id: &ScenarioId,
    params: GeometryParams,
) -> Result<ScenarioTemplate, ModelError> {
    let (layout, ego, adv, approach) =
        template_spec(id).ok_or_else(|| ModelError::UnknownScenario(id.to_string()))?;
    ScenarioTemplate::new(id.clone(), layout, ego, adv, approach, params)
}

/// Template with the default geometry.
pub fn template_for(id: &ScenarioId) -> Result<ScenarioTemplate, ModelError> {
    static DEFAULTS: OnceLock<Vec<ScenarioTemplate>> = OnceLock::new();
    let defaults = DEFAULTS.get_or_init(|| {
        ScenarioId::NAMED
            .iter()
            .map(|id| {
                template_with_geometry(id, GeometryParams::default())
                    .expect("built-in templates are valid")
            })
            .collect()
    });
    defaults
        .iter()
        .find(|t| &t.id == id)
        .cloned()
        .ok_or_else(|| ModelError::UnknownScenario(id.to_string()))
}
