use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontier::{Frontier, FrontierType};
use crate::gridmap::Point;

#[derive(Debug, Error, PartialEq)]
pub enum CoeffError {
    #[error("coefficient {0} must be finite")]
    NotFinite(&'static str),
    #[error("coefficient {name} must be {rule} (got {value})")]
    Sign {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    #[error("type offsets must satisfy c1 < c2 < c3 <= c4 (got {0}, {1}, {2}, {3})")]
    Ordering(f64, f64, f64, f64),
    #[error("thresh must be greater than 1 (got {0})")]
    Thresh(f64),
}

/// Weights of the frontier cost.
///
/// `alpha` scales distance (1/m), `gamma` the dynamic share of the frontier,
/// `zeta` and `eta` the aging term, `theta` the out-of-range bonus, and
/// `c1..c4` are the per-type offsets for simple, mixed simple, mixed and
/// dynamic frontiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCoefficients {
    pub alpha: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub eta: f64,
    pub theta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    #[serde(default = "default_thresh")]
    pub thresh: f64,
}

fn default_thresh() -> f64 {
    20.0
}

impl CostCoefficients {
    /// The hand-picked default values.
    pub const PROPOSED: CostCoefficients = CostCoefficients {
        alpha: 3.0,
        gamma: 0.2,
        zeta: -0.8,
        eta: 1.5,
        theta: -0.2,
        c1: 5.0,
        c2: 7.0,
        c3: 60.0,
        c4: 60.0,
        thresh: 20.0,
    };

    /// Checks signs, offset ordering and the threshold.
    pub fn validate(&self) -> Result<(), CoeffError> {
        let all = [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("eta", self.eta),
            ("theta", self.theta),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("thresh", self.thresh),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(CoeffError::NotFinite(name));
            }
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("eta", self.eta),
        ] {
            if v <= 0.0 {
                return Err(CoeffError::Sign {
                    name,
                    rule: "positive",
                    value: v,
                });
            }
        }
        for (name, v) in [("zeta", self.zeta), ("theta", self.theta)] {
            if v >= 0.0 {
                return Err(CoeffError::Sign {
                    name,
                    rule: "negative",
                    value: v,
                });
            }
        }
        if !(self.c1 < self.c2 && self.c2 < self.c3 && self.c3 <= self.c4) {
            return Err(CoeffError::Ordering(self.c1, self.c2, self.c3, self.c4));
        }
        if self.thresh <= 1.0 {
            return Err(CoeffError::Thresh(self.thresh));
        }
        Ok(())
    }

    /// Offset for a frontier type.
    pub fn offset(&self, kind: FrontierType) -> f64 {
        match kind {
            FrontierType::Simple => self.c1,
            FrontierType::MixedSimple => self.c2,
            FrontierType::Mixed => self.c3,
            FrontierType::Dynamic => self.c4,
        }
    }
}

impl Default for CostCoefficients {
    fn default() -> Self {
        Self::PROPOSED
    }
}

/// Cost of heading to a frontier from `robot` at time `now`. Lower is better.
///
/// Distance is measured to the center of the travel point. Mixed and dynamic
/// frontiers additionally get cheaper with age (`zeta * dt^eta`) and when the
/// travel point lies beyond `sensor_range` (`theta`). With an omnidirectional
/// sensor the field-of-view test reduces to that range check.
pub fn frontier_cost(
    f: &Frontier,
    robot: Point,
    now: f64,
    coeffs: &CostCoefficients,
    sensor_range: f64,
) -> f64 {
    let dist = robot.distance(&f.target);
    let total = (f.size_simple + f.size_dynamic) as f64;
    let mut cost = coeffs.alpha * dist
        + coeffs.offset(f.kind)
        + coeffs.gamma * (f.size_dynamic as f64 / total);
    if f.kind.ages() {
        let dt = (now - f.first_seen).max(0.0);
        let oor = if dist > sensor_range { 1.0 } else { 0.0 };
        cost += coeffs.zeta * dt.powf(coeffs.eta) + coeffs.theta * oor;
    }
    cost
}
