//! Multi-factor risk score of a simulation outcome.
//!
//! The score is the sum of a collision term (0 or 10) and three banded
//! terms (0..=4 each) for minimum distance, distance at maximum closing
//! speed, and TTC at maximum closing speed. Invalid outcomes score -1.
//! Bands are lower-inclusive and upper-exclusive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::SimulationOutcome;

pub const COLLISION_SCORE: u8 = 10;
pub const MAX_BAND_SCORE: u8 = 4;
pub const MAX_TOTAL: i32 = 22;
pub const INVALID_SCORE: i32 = -1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandError {
    #[error("{table} thresholds must be finite, non-negative and strictly increasing: {values:?}")]
    NotIncreasing { table: &'static str, values: [f64; 4] },
}

/// Band boundaries: `[0, t0[ -> 4`, `[t0, t1[ -> 3`, ..., `[t3, inf[ -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessBands {
    /// Centimetres.
    pub md: [f64; 4],
    /// Centimetres.
    pub d_ms: [f64; 4],
    /// Centiseconds.
    pub ttc_ms: [f64; 4],
}

impl Default for FitnessBands {
    fn default() -> Self {
        Self {
            md: [820.0, 1100.0, 1376.0, 1655.0],
            d_ms: [3780.0, 4020.0, 4255.0, 4490.0],
            ttc_ms: [359.0, 394.0, 429.0, 464.0],
        }
    }
}

impl FitnessBands {
    pub fn validate(&self) -> Result<(), BandError> {
        for (table, values) in [("md", self.md), ("d_ms", self.d_ms), ("ttc_ms", self.ttc_ms)] {
            let ok = values[0].is_finite()
                && values[0] >= 0.0
                && values.windows(2).all(|w| w[1].is_finite() && w[0] < w[1]);
            if !ok {
                return Err(BandError::NotIncreasing { table, values });
            }
        }
        Ok(())
    }
}

fn banded(value: f64, thresholds: &[f64; 4], what: &str) -> u8 {
    assert!(value >= 0.0, "{what} must be non-negative, got {value}");
    MAX_BAND_SCORE - thresholds.iter().filter(|&&t| t <= value).count() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RiskScore {
    pub total: i32,
    pub c: u8,
    pub md: u8,
    pub d_ms: u8,
    pub ttc_ms: u8,
}

impl RiskScore {
    pub const INVALID: RiskScore = RiskScore {
        total: INVALID_SCORE,
        c: 0,
        md: 0,
        d_ms: 0,
        ttc_ms: 0,
    };

    pub fn is_valid(&self) -> bool {
        self.total != INVALID_SCORE
    }
}

pub fn score_collision(collision: bool) -> u8 {
    if collision {
        COLLISION_SCORE
    } else {
        0
    }
}

/// # Panics
/// On negative or NaN input.
pub fn score_md(md_cm: f64, bands: &FitnessBands) -> u8 {
    banded(md_cm, &bands.md, "md_cm")
}

/// # Panics
/// On negative or NaN input.
pub fn score_d_ms(d_ms_cm: f64, bands: &FitnessBands) -> u8 {
    banded(d_ms_cm, &bands.d_ms, "d_ms_cm")
}

/// `+inf` scores 0.
///
/// # Panics
/// On negative or NaN input.
pub fn score_ttc_ms(ttc_cs: f64, bands: &FitnessBands) -> u8 {
    banded(ttc_cs, &bands.ttc_ms, "ttc_cs")
}

pub fn risk_level(outcome: &SimulationOutcome, bands: &FitnessBands) -> RiskScore {
    let (true, Some(md), Some(d_ms), Some(ttc)) =
        (outcome.valid, outcome.md_cm, outcome.d_ms_cm, outcome.ttc_ms_cs)
    else {
        return RiskScore::INVALID;
    };
    let c = score_collision(outcome.collision);
    let md = score_md(md, bands);
    let d_ms = score_d_ms(d_ms, bands);
    let ttc_ms = score_ttc_ms(ttc, bands);
    RiskScore {
        total: i32::from(c) + i32::from(md) + i32::from(d_ms) + i32::from(ttc_ms),
        c,
        md,
        d_ms,
        ttc_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::InvalidReason;

    #[test]
    fn collision_term() {
        assert_eq!(score_collision(true), 10);
        assert_eq!(score_collision(false), 0);
        assert_eq!(score_collision(true), score_collision(true));
    }

    #[test]
    fn band_examples() {
        let b = FitnessBands::default();
        assert_eq!(score_md(500.0, &b), 4);
        assert_eq!(score_md(820.0, &b), 3);
        assert_eq!(score_md(1655.0, &b), 0);
        assert_eq!(score_d_ms(3000.0, &b), 4);
        assert_eq!(score_d_ms(4490.0, &b), 0);
        assert_eq!(score_d_ms(4100.0, &b), 2);
        assert_eq!(score_ttc_ms(200.0, &b), 4);
        assert_eq!(score_ttc_ms(f64::INFINITY, &b), 0);
        assert_eq!(score_ttc_ms(429.0, &b), 1);
    }

    #[test]
    #[should_panic(expected = "non-negative")]
    fn negative_md_is_a_contract_violation() {
        score_md(-1.0, &FitnessBands::default());
    }

    #[test]
    fn risk_level_examples() {
        let b = FitnessBands::default();
        let max = risk_level(&SimulationOutcome::valid(true, 500.0, 3000.0, 200.0), &b);
        assert_eq!(max.total, 22);
        let zero = risk_level(&SimulationOutcome::valid(false, 1700.0, 4500.0, 470.0), &b);
        assert_eq!(zero.total, 0);
        let inv = risk_level(&SimulationOutcome::invalid(InvalidReason::NoInteraction), &b);
        assert_eq!(inv, RiskScore::INVALID);
        assert_eq!((inv.c, inv.md, inv.d_ms, inv.ttc_ms), (0, 0, 0, 0));
    }

    #[test]
    fn band_partition_covers_every_integer_once() {
        // Independent oracle: explicit interval table, lower-inclusive.
        let md = [(0, 820, 4), (820, 1100, 3), (1100, 1376, 2), (1376, 1655, 1), (1655, i64::MAX, 0)];
        let b = FitnessBands::default();
        for x in 0..=10_000i64 {
            let hits: Vec<_> = md.iter().filter(|(lo, hi, _)| *lo <= x && x < *hi).collect();
            assert_eq!(hits.len(), 1);
            assert_eq!(score_md(x as f64, &b), hits[0].2);
        }
    }

    #[test]
    fn bands_are_non_increasing() {
        let b = FitnessBands::default();
        let mut prev = (4, 4, 4);
        for x in 0..12_000 {
            let x = x as f64;
            let cur = (score_md(x, &b), score_d_ms(x, &b), score_ttc_ms(x, &b));
            assert!(cur.0 <= prev.0 && cur.1 <= prev.1 && cur.2 <= prev.2);
            prev = cur;
        }
    }

    #[test]
    fn band_validation() {
        assert!(FitnessBands::default().validate().is_ok());
        let overlapping = FitnessBands {
            d_ms: [3780.0, 4255.0, 4255.0, 4490.0],
            ..FitnessBands::default()
        };
        assert!(overlapping.validate().is_err());
    }
}
