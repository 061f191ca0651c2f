//! Search-based generation of high-risk intersection scenarios.
//!
//! A genetic algorithm evolves seven-parameter scenario configurations for
//! a set of two-vehicle intersection templates, scoring each candidate
//! with a banded risk function over the output of a kinematic simulator.

pub mod analysis;
pub mod fitness;
pub mod ga;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod scenario_dsl;
pub mod scenario_model;
pub mod simulator;
