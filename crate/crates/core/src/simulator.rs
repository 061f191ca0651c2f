//! Fixed-timestep kinematic simulation of two vehicles crossing an
//! intersection.
//!
//! Vehicles are point masses moving along their template paths. The
//! adversary holds its speed; the ego holds its speed until it is inside
//! `safety_dist` of the adversary while closing, then decelerates at
//! `ego_brake * MAX_DECEL`. It never re-accelerates.
//!
//! Distances in the outcome are centimetres and TTC is centiseconds, the
//! units the risk bands are expressed in.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PathDef, Segment, Vec2};
use crate::scenario_model::{Arm, Genome, GeometryParams, LaneLayout, ManeuverKind, ScenarioTemplate};

/// Full-brake deceleration, m/s².
pub const MAX_DECEL: f64 = 8.0;

const KMH_TO_MPS: f64 = 1.0 / 3.6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("timestep must be positive, got {0}")]
    Timestep(f64),
    #[error("horizon {horizon} must be at least 10 timesteps of {timestep}")]
    Horizon { horizon: f64, timestep: f64 },
    #[error("interaction radius must be positive, got {0}")]
    Radius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Seconds.
    pub timestep: f64,
    /// Seconds.
    pub horizon: f64,
    /// Metres. Runs whose vehicles never get this close are invalid.
    pub interaction_radius: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            timestep: 0.05,
            horizon: 20.0,
            interaction_radius: 50.0,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.timestep.is_finite() && self.timestep > 0.0) {
            return Err(ConfigError::Timestep(self.timestep));
        }
        if !(self.horizon.is_finite() && self.horizon >= 10.0 * self.timestep) {
            return Err(ConfigError::Horizon {
                horizon: self.horizon,
                timestep: self.timestep,
            });
        }
        if !(self.interaction_radius.is_finite() && self.interaction_radius > 0.0) {
            return Err(ConfigError::Radius(self.interaction_radius));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.timestep).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Metres along the path.
    pub arc_position: f64,
    /// m/s.
    pub speed: f64,
    pub position: Vec2,
    /// Radians.
    pub heading: f64,
}

impl VehicleState {
    fn on_path(path: &PathDef, arc_position: f64, speed: f64) -> Self {
        Self {
            arc_position,
            speed,
            position: path.position(arc_position),
            heading: path.heading(arc_position),
        }
    }

    fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub ego: VehicleState,
    pub adv: VehicleState,
}

impl StatePair {
    /// `(separation, closing_speed)`; closing speed is positive while the
    /// vehicles approach each other.
    pub fn relative(&self) -> (f64, f64) {
        relative_kinematics(
            self.adv.position - self.ego.position,
            self.adv.velocity() - self.ego.velocity(),
        )
    }
}

fn relative_kinematics(rel_pos: Vec2, rel_vel: Vec2) -> (f64, f64) {
    let sep = rel_pos.norm();
    let closing = if sep > 0.0 {
        -rel_pos.dot(rel_vel) / sep
    } else {
        rel_vel.norm()
    };
    (sep, closing)
}

/// Both vehicle paths plus the arc-length of each path's point nearest the
/// conflict-zone center. Initial distances are measured back from there.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPair {
    pub ego: PathDef,
    pub adv: PathDef,
    pub ego_anchor: f64,
    pub adv_anchor: f64,
}

/// Lateral offsets `(entry, exit)` of a vehicle's lane from the road
/// centreline. In the three-lane layout left turns start from the shared
/// centre lane and through traffic uses the outer lanes.
fn lane_offsets(params: &GeometryParams, layout: LaneLayout, maneuver: ManeuverKind) -> (f64, f64) {
    let w = params.lane_width;
    match (layout, maneuver) {
        (LaneLayout::TwoByTwo, _) => (w / 2.0, w / 2.0),
        (LaneLayout::ThreeLane, ManeuverKind::LeftTurn) => (0.0, w),
        (LaneLayout::ThreeLane, _) => (w, w),
    }
}

/// Path for a vehicle entering from the south heading north, before
/// rotation onto its arm.
fn canonical_path(params: &GeometryParams, entry: f64, exit: f64, maneuver: ManeuverKind) -> Vec<Segment> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let l = params.arm_length;
    let north = Vec2::new(0.0, 1.0);
    match maneuver {
        ManeuverKind::CrossStraight => vec![Segment::Line {
            start: Vec2::new(entry, -l),
            dir: north,
            length: 2.0 * l,
        }],
        ManeuverKind::RightTurn => {
            let r = params.turn_radius_right;
            let turn_y = -exit - r;
            vec![
                Segment::Line {
                    start: Vec2::new(entry, -l),
                    dir: north,
                    length: turn_y + l,
                },
                Segment::Arc {
                    center: Vec2::new(entry + r, turn_y),
                    radius: r,
                    start_angle: PI,
                    sweep: -FRAC_PI_2,
                },
                Segment::Line {
                    start: Vec2::new(entry + r, -exit),
                    dir: Vec2::new(1.0, 0.0),
                    length: l - (entry + r),
                },
            ]
        }
        ManeuverKind::LeftTurn => {
            let r = params.turn_radius_left;
            let turn_y = exit - r;
            vec![
                Segment::Line {
                    start: Vec2::new(entry, -l),
                    dir: north,
                    length: turn_y + l,
                },
                Segment::Arc {
                    center: Vec2::new(entry - r, turn_y),
                    radius: r,
                    start_angle: 0.0,
                    sweep: FRAC_PI_2,
                },
                Segment::Line {
                    start: Vec2::new(entry - r, exit),
                    dir: Vec2::new(-1.0, 0.0),
                    length: l - (r - entry),
                },
            ]
        }
    }
}

fn rotate_segment(seg: Segment, theta: f64) -> Segment {
    match seg {
        Segment::Line { start, dir, length } => Segment::Line {
            start: start.rotate(theta),
            dir: dir.rotate(theta),
            length,
        },
        Segment::Arc {
            center,
            radius,
            start_angle,
            sweep,
        } => Segment::Arc {
            center: center.rotate(theta),
            radius,
            start_angle: start_angle + theta,
            sweep,
        },
    }
}

fn vehicle_path(params: &GeometryParams, layout: LaneLayout, maneuver: ManeuverKind, arm: Arm) -> PathDef {
    let (entry, exit) = lane_offsets(params, layout, maneuver);
    let theta = arm.rotation();
    PathDef::new(
        canonical_path(params, entry, exit, maneuver)
            .into_iter()
            .map(|s| rotate_segment(s, theta))
            .collect(),
    )
}

/// Ego and adversary paths for a maneuver combination.
pub fn nominal_paths(
    params: &GeometryParams,
    layout: LaneLayout,
    ego: ManeuverKind,
    adv: ManeuverKind,
    adv_arm: Arm,
) -> (PathDef, PathDef) {
    (
        vehicle_path(params, layout, ego, Arm::South),
        vehicle_path(params, layout, adv, adv_arm),
    )
}

pub fn build_paths(template: &ScenarioTemplate) -> PathPair {
    let params = template.geometry.params();
    let (ego, adv) = nominal_paths(
        &params,
        template.lane_layout,
        template.ego_maneuver,
        template.adv_maneuver,
        template.adv_arm(),
    );
    let center = template.geometry.conflict_zone_center;
    PathPair {
        ego_anchor: ego.closest_arclength(center),
        adv_anchor: adv.closest_arclength(center),
        ego,
        adv,
    }
}

/// Time to collision in seconds; infinite when not approaching.
pub fn compute_ttc(separation: f64, closing_speed: f64) -> f64 {
    if closing_speed > 0.0 {
        separation / closing_speed
    } else {
        f64::INFINITY
    }
}

fn brake_active(sep: f64, closing: f64, genome: &Genome) -> bool {
    sep < genome.safety_dist && closing > 0.0
}

/// Distance covered and final speed after `duration` seconds at constant
/// deceleration `decel` from `speed`, stopping at zero.
fn decelerate(speed: f64, decel: f64, duration: f64) -> (f64, f64) {
    if duration <= 0.0 {
        return (0.0, speed);
    }
    if decel <= 0.0 {
        return (speed * duration, speed);
    }
    let v1 = speed - decel * duration;
    if v1 >= 0.0 {
        ((speed + v1) * 0.5 * duration, v1)
    } else {
        (speed * speed / (2.0 * decel), 0.0)
    }
}

fn coast(paths: &PathPair, pair: &StatePair, dt: f64) -> StatePair {
    StatePair {
        ego: VehicleState::on_path(&paths.ego, pair.ego.arc_position + pair.ego.speed * dt, pair.ego.speed),
        adv: VehicleState::on_path(&paths.adv, pair.adv.arc_position + pair.adv.speed * dt, pair.adv.speed),
    }
}

/// Advances both vehicles by `dt`.
///
/// If the braking condition first becomes true inside the step, the onset
/// instant is located by linear interpolation and the ego brakes only for
/// the remainder of the step.
pub fn step(pair: &StatePair, genome: &Genome, paths: &PathPair, dt: f64) -> StatePair {
    let decel = genome.ego_brake * MAX_DECEL;
    let (sep0, close0) = pair.relative();
    let coasting = coast(paths, pair, dt);
    let brake_from = if brake_active(sep0, close0, genome) {
        Some(0.0)
    } else if decel > 0.0 {
        let (sep1, close1) = coasting.relative();
        if brake_active(sep1, close1, genome) {
            let tau_sep = if sep0 >= genome.safety_dist {
                (sep0 - genome.safety_dist) / (sep0 - sep1)
            } else {
                0.0
            };
            let tau_close = if close0 <= 0.0 {
                -close0 / (close1 - close0)
            } else {
                0.0
            };
            Some(tau_sep.max(tau_close).clamp(0.0, 1.0))
        } else {
            None
        }
    } else {
        None
    };
    let Some(tau) = brake_from else {
        return coasting;
    };
    let v0 = pair.ego.speed;
    let coast_len = v0 * tau * dt;
    let (brake_len, v1) = decelerate(v0, decel, (1.0 - tau) * dt);
    StatePair {
        ego: VehicleState::on_path(&paths.ego, pair.ego.arc_position + coast_len + brake_len, v1),
        adv: coasting.adv,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    NoInteraction,
    DegenerateSpawnOverlap,
}

impl InvalidReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidReason::NoInteraction => "no_interaction",
            InvalidReason::DegenerateSpawnOverlap => "degenerate_spawn_overlap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Seconds.
    pub time: f64,
    pub ego: VehicleState,
    pub adv: VehicleState,
    /// Metres.
    pub separation: f64,
    /// m/s.
    pub closing_speed: f64,
}

impl TraceRecord {
    fn new(time: f64, pair: &StatePair) -> Self {
        let (separation, closing_speed) = pair.relative();
        Self {
            time,
            ego: pair.ego,
            adv: pair.adv,
            separation,
            closing_speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    #[default]
    Full,
    /// Metrics only; `trace` stays empty.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub valid: bool,
    pub invalid_reason: Option<InvalidReason>,
    pub collision: bool,
    /// Minimum separation, centimetres. `None` when invalid.
    pub md_cm: Option<f64>,
    /// Separation at the instant of maximum closing speed, centimetres.
    pub d_ms_cm: Option<f64>,
    /// TTC at the instant of maximum closing speed, centiseconds; may be
    /// infinite.
    pub ttc_ms_cs: Option<f64>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl SimulationOutcome {
    pub fn invalid(reason: InvalidReason) -> Self {
        Self {
            valid: false,
            invalid_reason: Some(reason),
            collision: false,
            md_cm: None,
            d_ms_cm: None,
            ttc_ms_cs: None,
            trace: Vec::new(),
        }
    }

    /// A valid outcome with the given metrics and no trace.
    pub fn valid(collision: bool, md_cm: f64, d_ms_cm: f64, ttc_ms_cs: f64) -> Self {
        Self {
            valid: true,
            invalid_reason: None,
            collision,
            md_cm: Some(md_cm),
            d_ms_cm: Some(d_ms_cm),
            ttc_ms_cs: Some(ttc_ms_cs),
            trace: Vec::new(),
        }
    }
}

fn classify(first_sep: f64, min_sep: f64, crash_dist: f64, config: &SimulationConfig) -> (bool, Option<InvalidReason>) {
    if first_sep < crash_dist {
        (false, Some(InvalidReason::DegenerateSpawnOverlap))
    } else if min_sep >= config.interaction_radius {
        (false, Some(InvalidReason::NoInteraction))
    } else {
        (true, None)
    }
}

/// Validity of a complete trace. The spawn check needs the genome's
/// `crash_dist`.
pub fn classify_validity(
    trace: &[TraceRecord],
    crash_dist: f64,
    config: &SimulationConfig,
) -> (bool, Option<InvalidReason>) {
    let Some(first) = trace.first() else {
        return (false, Some(InvalidReason::NoInteraction));
    };
    let min_sep = trace.iter().map(|r| r.separation).fold(f64::INFINITY, f64::min);
    classify(first.separation, min_sep, crash_dist, config)
}

/// Initial states: each vehicle sits `init_dist` metres before its anchor.
pub fn spawn(paths: &PathPair, genome: &Genome) -> StatePair {
    StatePair {
        ego: VehicleState::on_path(
            &paths.ego,
            paths.ego_anchor - genome.ego_init_dist,
            genome.ego_speed * KMH_TO_MPS,
        ),
        adv: VehicleState::on_path(
            &paths.adv,
            paths.adv_anchor - genome.adv_init_dist,
            genome.adv_speed * KMH_TO_MPS,
        ),
    }
}

pub fn run(template: &ScenarioTemplate, genome: &Genome, config: &SimulationConfig) -> SimulationOutcome {
    run_with_paths(&build_paths(template), genome, config, TraceMode::Full)
}

/// Simulation over prebuilt paths.
///
/// Between steps the relative position is treated as linear in time, so the
/// minimum distance and the first contact inside a step are found exactly
/// for that interpolation rather than only at step boundaries.
pub fn run_with_paths(
    paths: &PathPair,
    genome: &Genome,
    config: &SimulationConfig,
    mode: TraceMode,
) -> SimulationOutcome {
    let dt = config.timestep;
    let crash = genome.crash_dist;
    let mut trace = Vec::new();
    let keep = |r: TraceRecord, trace: &mut Vec<TraceRecord>| {
        if mode == TraceMode::Full {
            trace.push(r);
        }
    };

    let mut cur = spawn(paths, genome);
    let first = TraceRecord::new(0.0, &cur);
    if first.separation < crash {
        let mut out = SimulationOutcome::invalid(InvalidReason::DegenerateSpawnOverlap);
        keep(first, &mut trace);
        out.trace = trace;
        return out;
    }

    let mut min_sample = first.separation;
    let mut md = first.separation;
    let mut best = (first.closing_speed, first.separation);
    let mut collision = false;
    keep(first, &mut trace);

    for n in 1..=config.steps() {
        let next = step(&cur, genome, paths, dt);
        let p0 = cur.adv.position - cur.ego.position;
        let delta = (next.adv.position - next.ego.position) - p0;
        let a = delta.dot(delta);

        if let Some(tau) = first_contact(p0, delta, crash) {
            let lerp_state = |s0: &VehicleState, s1: &VehicleState, path: &PathDef| {
                let arc = s0.arc_position + (s1.arc_position - s0.arc_position) * tau;
                VehicleState {
                    arc_position: arc,
                    speed: s0.speed + (s1.speed - s0.speed) * tau,
                    position: s0.position.lerp(s1.position, tau),
                    heading: path.heading(arc),
                }
            };
            let contact = StatePair {
                ego: lerp_state(&cur.ego, &next.ego, &paths.ego),
                adv: lerp_state(&cur.adv, &next.adv, &paths.adv),
            };
            let mut rec = TraceRecord::new((n as f64 - 1.0 + tau) * dt, &contact);
            rec.separation = rec.separation.min(crash);
            md = md.min(rec.separation);
            min_sample = min_sample.min(rec.separation);
            if rec.closing_speed > best.0 {
                best = (rec.closing_speed, rec.separation);
            }
            keep(rec, &mut trace);
            collision = true;
            break;
        }

        let tau_min = if a > 0.0 { (-p0.dot(delta) / a).clamp(0.0, 1.0) } else { 0.0 };
        md = md.min((p0 + delta * tau_min).norm());

        let rec = TraceRecord::new(n as f64 * dt, &next);
        md = md.min(rec.separation);
        min_sample = min_sample.min(rec.separation);
        if rec.closing_speed > best.0 {
            best = (rec.closing_speed, rec.separation);
        }
        keep(rec, &mut trace);
        cur = next;
    }

    let (valid, reason) = classify(first.separation, min_sample, crash, config);
    if !valid {
        let mut out = SimulationOutcome::invalid(reason.expect("invalid has a reason"));
        out.trace = trace;
        return out;
    }
    let (closing, d_ms) = best;
    SimulationOutcome {
        valid: true,
        invalid_reason: None,
        collision,
        md_cm: Some(md * 100.0),
        d_ms_cm: Some(d_ms * 100.0),
        ttc_ms_cs: Some(compute_ttc(d_ms, closing) * 100.0),
        trace,
    }
}

/// Smallest `tau` in `(0, 1]` with `|p0 + tau * delta| <= radius`.
fn first_contact(p0: Vec2, delta: Vec2, radius: f64) -> Option<f64> {
    let a = delta.dot(delta);
    let b = 2.0 * p0.dot(delta);
    let c = p0.dot(p0) - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    if a == 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let tau = (-b - disc.sqrt()) / (2.0 * a);
    (tau > 0.0 && tau <= 1.0).then_some(tau)
}

/// Writes a trace as CSV with six-decimal fixed formatting.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "time_s,ego_x,ego_y,ego_v,adv_x,adv_y,adv_v,separation_m,closing_mps")?;
    for r in trace {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.time,
            r.ego.position.x,
            r.ego.position.y,
            r.ego.speed,
            r.adv.position.x,
            r.adv.position.y,
            r.adv.speed,
            r.separation,
            r.closing_speed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_model::{template_for, ScenarioId, INIT_DIST_CAP};

    fn genome(ego_init: f64, ego_v: f64, brake: f64, adv_init: f64, adv_v: f64, safety: f64, crash: f64) -> Genome {
        Genome::from_array([ego_init, ego_v, brake, adv_init, adv_v, safety, crash])
    }

    #[test]
    fn ttc_examples() {
        assert_eq!(compute_ttc(10.0, 5.0), 2.0);
        assert_eq!(compute_ttc(10.0, 0.0), f64::INFINITY);
        assert_eq!(compute_ttc(0.0, 3.0), 0.0);
    }

    #[test]
    fn template_a_paths() {
        let t = template_for(&ScenarioId::A).unwrap();
        let p = build_paths(&t);
        assert_eq!(p.ego.segments().len(), 1);
        assert!(matches!(p.adv.segments()[1], Segment::Arc { sweep, .. } if sweep > 0.0));
        // Adversary arc ends heading east, across the ego's lane.
        let end = p.adv.heading(p.adv.total_length());
        assert!(end.cos() > 0.999, "{end}");
    }

    #[test]
    fn b_and_e_use_distinct_adversary_paths() {
        let b = build_paths(&template_for(&ScenarioId::B).unwrap());
        let e = build_paths(&template_for(&ScenarioId::E).unwrap());
        assert_ne!(b.adv, e.adv);
    }

    #[test]
    fn no_brake_when_far() {
        let t = template_for(&ScenarioId::A).unwrap();
        let paths = build_paths(&t);
        let g = genome(100.0, 50.0, 1.0, 100.0, 50.0, 10.0, 2.0);
        let s0 = spawn(&paths, &g);
        let s1 = step(&s0, &g, &paths, 0.05);
        assert_eq!(s1.ego.speed, s0.ego.speed);
    }

    #[test]
    fn zero_brake_never_decelerates() {
        let t = template_for(&ScenarioId::A).unwrap();
        let paths = build_paths(&t);
        let g = genome(20.0, 40.0, 0.0, 20.0, 40.0, 20.0, 0.0);
        let out = run_with_paths(&paths, &g, &SimulationConfig::default(), TraceMode::Full);
        let v0 = g.ego_speed / 3.6;
        assert!(out.trace.iter().all(|r| r.ego.speed == v0));
    }

    #[test]
    fn full_brake_stops_in_closed_form_steps() {
        let t = template_for(&ScenarioId::C).unwrap();
        let paths = build_paths(&t);
        // Adversary parked right in front: always inside safety distance and closing.
        let g = genome(12.0, 20.0, 1.0, 0.0, 5.0, 20.0, 0.0);
        let dt = 0.05;
        let mut s = spawn(&paths, &g);
        let v0 = s.ego.speed;
        let expected = (v0 / (MAX_DECEL * dt)).ceil() as usize;
        let mut steps = 0;
        while s.ego.speed > 0.0 {
            let (sep, close) = s.relative();
            assert!(sep < g.safety_dist && close > 0.0, "brake condition lost at step {steps}");
            let next = step(&s, &g, &paths, dt);
            assert!(next.ego.speed <= s.ego.speed);
            s = next;
            steps += 1;
        }
        assert_eq!(steps, expected);
    }

    #[test]
    fn spawn_overlap_is_invalid() {
        let t = template_for(&ScenarioId::A).unwrap();
        let out = run(&t, &genome(0.0, 30.0, 0.5, 0.0, 30.0, 5.0, 2.0), &SimulationConfig::default());
        assert!(!out.valid);
        assert_eq!(out.invalid_reason, Some(InvalidReason::DegenerateSpawnOverlap));
        assert!(!out.collision);
        assert_eq!(out.md_cm, None);
    }

    #[test]
    fn far_apart_is_no_interaction() {
        // Ego starts at the conflict zone and drives north; the adversary
        // starts at the cap on the east arm at walking pace.
        let t = template_for(&ScenarioId::C).unwrap();
        let paths = build_paths(&t);
        let g = genome(0.0, 80.0, 0.0, INIT_DIST_CAP, 5.0, 0.0, 1.0);
        let cfg = SimulationConfig::default();
        let out = run_with_paths(&paths, &g, &cfg, TraceMode::Full);

        // Oracle: both vehicles stay on straight segments for the whole
        // horizon, so separation is the closest approach of two uniform
        // straight-line motions.
        let s0 = spawn(&paths, &g);
        let va = s0.adv.velocity();
        assert!(paths.adv.position(s0.adv.arc_position + va.norm() * cfg.horizon).dist(
            s0.adv.position + va * cfg.horizon
        ) < 1e-9);
        let p0 = s0.adv.position - s0.ego.position;
        let v = va - s0.ego.velocity();
        let t_star = (-p0.dot(v) / v.dot(v)).clamp(0.0, cfg.horizon);
        let oracle_min = (p0 + v * t_star).norm();
        assert!(oracle_min > cfg.interaction_radius);
        let traced = out.trace.iter().map(|r| r.separation).fold(f64::INFINITY, f64::min);
        // Samples land on the step grid, never below the continuous minimum.
        assert!(traced >= oracle_min - 1e-9 && traced - oracle_min < 1e-3, "{traced} vs {oracle_min}");

        assert!(!out.valid);
        assert_eq!(out.invalid_reason, Some(InvalidReason::NoInteraction));
    }

    #[test]
    fn classify_thresholds() {
        let cfg = SimulationConfig::default();
        assert_eq!(classify(200.0, 120.0, 1.0, &cfg), (false, Some(InvalidReason::NoInteraction)));
        assert_eq!(classify(200.0, 3.0, 1.0, &cfg), (true, None));
        assert_eq!(classify(200.0, 50.0, 1.0, &cfg), (false, Some(InvalidReason::NoInteraction)));
        assert_eq!(classify(0.5, 0.5, 1.0, &cfg), (false, Some(InvalidReason::DegenerateSpawnOverlap)));
    }

    #[test]
    fn synchronized_arrival_collides() {
        let t = template_for(&ScenarioId::A).unwrap();
        let out = run(&t, &genome(60.0, 40.0, 0.0, 60.0, 40.0, 0.0, 2.0), &SimulationConfig::default());
        assert!(out.valid && out.collision);
        assert!(out.md_cm.unwrap() <= 200.0);
        let last = out.trace.last().unwrap();
        assert!(last.separation <= 2.0);
    }

    #[test]
    fn trace_csv_format() {
        let t = template_for(&ScenarioId::B).unwrap();
        let out = run(&t, &genome(40.0, 30.0, 0.5, 40.0, 30.0, 5.0, 1.0), &SimulationConfig::default());
        let mut buf = Vec::new();
        write_trace_csv(&out.trace[..2], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "time_s,ego_x,ego_y,ego_v,adv_x,adv_y,adv_v,separation_m,closing_mps");
        assert!(lines[1].starts_with("0.000000,"));
        assert_eq!(lines[2].split(',').count(), 9);
    }

    #[test]
    fn config_validation() {
        assert!(SimulationConfig::default().validate().is_ok());
        let bad = SimulationConfig {
            horizon: 0.1,
            ..SimulationConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
