//! Evaluation: ineffective ratio, loss, lower-bound calibration and batch
//! summaries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{map_divergence, GridMap, MapError};
use crate::sim::{EpisodeResult, Termination};
use crate::strategy::StrategyKind;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no ticks recorded")]
    NoTicks,
    #[error("invalid loss parameters: {0}")]
    BadParams(String),
    #[error("no run finished with divergence below {0}; widen the calibration batch")]
    NoQualifyingRun(f64),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Normalisers of the loss: the best achievable path length `l` (m) and
/// duration `t` (s), plus the weight of the map divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub l: f64,
    pub t: f64,
    pub lambda: f64,
}

impl LossParams {
    pub const DEFAULT_LAMBDA: f64 = 20.0;

    pub fn new(l: f64, t: f64, lambda: f64) -> Result<Self, MetricsError> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(MetricsError::BadParams(format!(
                "length bound must be positive (got {l})"
            )));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(MetricsError::BadParams(format!(
                "time bound must be positive (got {t})"
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(MetricsError::BadParams(format!(
                "lambda must be non-negative (got {lambda})"
            )));
        }
        Ok(Self { l, t, lambda })
    }
}

/// Share of ticks in which the map gained nothing.
pub fn ineffective_ratio(per_tick_gain: &[bool]) -> Result<f64, MetricsError> {
    if per_tick_gain.is_empty() {
        return Err(MetricsError::NoTicks);
    }
    let idle = per_tick_gain.iter().filter(|g| !**g).count();
    Ok(idle as f64 / per_tick_gain.len() as f64)
}

/// `length / l + time / t + lambda * divergence`.
pub fn loss_value(length: f64, time: f64, divergence: f64, params: &LossParams) -> f64 {
    length / params.l + time / params.t + params.lambda * divergence
}

/// Loss of an episode against the ground truth.
pub fn loss(
    result: &EpisodeResult,
    ground_truth: &GridMap,
    params: &LossParams,
) -> Result<f64, MetricsError> {
    let div = map_divergence(&result.final_map, ground_truth)?;
    Ok(loss_value(result.tot_length, result.tot_time, div, params))
}

/// Per-run record as exported in batch summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub duration_s: f64,
    pub length_m: f64,
    pub ineffective_ratio: f64,
    pub divergence: f64,
    /// Absent when the scenario has no calibrated bounds.
    pub loss: Option<f64>,
    pub termination: Termination,
}

impl RunSummary {
    pub fn new(
        result: &EpisodeResult,
        ground_truth: &GridMap,
        params: Option<&LossParams>,
    ) -> Result<Self, MetricsError> {
        let divergence = map_divergence(&result.final_map, ground_truth)?;
        Ok(Self {
            strategy: result.strategy,
            seed: result.seed,
            duration_s: result.tot_time,
            length_m: result.tot_length,
            ineffective_ratio: ineffective_ratio(&result.per_tick_gain)?,
            divergence,
            loss: params.map(|p| loss_value(result.tot_length, result.tot_time, divergence, p)),
            termination: result.termination,
        })
    }
}

/// Divergence below which a finished run counts as a complete exploration
/// when calibrating bounds.
pub const COMPLETENESS_THRESHOLD: f64 = 0.15;

/// Shortest length and shortest duration over complete runs, each taken
/// independently.
pub fn estimate_lower_bounds(
    runs: &[RunSummary],
    completeness: f64,
) -> Result<(f64, f64), MetricsError> {
    let ok: Vec<&RunSummary> = runs
        .iter()
        .filter(|r| r.termination == Termination::Complete && r.divergence < completeness)
        .collect();
    if ok.is_empty() {
        return Err(MetricsError::NoQualifyingRun(completeness));
    }
    let l = ok.iter().map(|r| r.length_m).fold(f64::INFINITY, f64::min);
    let t = ok
        .iter()
        .map(|r| r.duration_s)
        .fold(f64::INFINITY, f64::min);
    Ok((l, t))
}

/// Mean and sample standard deviation (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

/// One strategy's row block of a batch summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub runs: usize,
    pub completed: usize,
    pub duration_s: Stat,
    pub length_m: Stat,
    pub ineffective_ratio: Stat,
    pub divergence: Stat,
    pub loss: Option<Stat>,
}

impl StrategySummary {
    pub fn of(strategy: StrategyKind, runs: &[RunSummary]) -> Self {
        let pick = |f: fn(&RunSummary) -> f64| Stat::of(&runs.iter().map(f).collect::<Vec<_>>());
        let losses: Option<Vec<f64>> = runs.iter().map(|r| r.loss).collect();
        Self {
            strategy,
            runs: runs.len(),
            completed: runs
                .iter()
                .filter(|r| r.termination == Termination::Complete)
                .count(),
            duration_s: pick(|r| r.duration_s),
            length_m: pick(|r| r.length_m),
            ineffective_ratio: pick(|r| r.ineffective_ratio),
            divergence: pick(|r| r.divergence),
            loss: losses.filter(|l| !l.is_empty()).map(|l| Stat::of(&l)),
        }
    }
}

/// A whole batch: every run plus one summary per strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub scenario: String,
    pub bounds: Option<LossParams>,
    pub summary: Vec<StrategySummary>,
    pub runs: Vec<RunSummary>,
}

impl BatchSummary {
    pub fn new(scenario: &str, bounds: Option<LossParams>, runs: Vec<RunSummary>) -> Self {
        let mut kinds: Vec<StrategyKind> = Vec::new();
        for r in &runs {
            if !kinds.contains(&r.strategy) {
                kinds.push(r.strategy);
            }
        }
        let summary = kinds
            .iter()
            .map(|&k| {
                let mine: Vec<RunSummary> =
                    runs.iter().filter(|r| r.strategy == k).cloned().collect();
                StrategySummary::of(k, &mine)
            })
            .collect();
        Self {
            scenario: scenario.to_string(),
            bounds,
            summary,
            runs,
        }
    }

    pub fn strategy(&self, kind: StrategyKind) -> Option<&StrategySummary> {
        self.summary.iter().find(|s| s.strategy == kind)
    }
}
