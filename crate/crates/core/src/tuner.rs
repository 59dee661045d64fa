//! Blackbox tuning of the cost coefficients.
//!
//! The objective is the mean loss of CBD episodes over a fixed seed set. An
//! initial quasi-random design (a quarter of the budget, always including
//! the proposed coefficients) is followed by sequential proposals from an
//! inverse-distance-weighted nearest-neighbour surrogate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{loss, MetricsError};
use crate::sim::{run_episode, EpisodeError, Scenario};
use crate::strategy::{CoeffError, CostCoefficients, StrategyKind};

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("invalid parameter space: {0}")]
    Space(String),
    #[error("budget must be at least 1 (got {0})")]
    Budget(usize),
    #[error("seeds per evaluation must be at least 1")]
    Seeds,
    #[error("scenario '{0}' has no [bounds] section; calibrate it first")]
    NoBounds(String),
    #[error("no scenario to evaluate on")]
    NoScenario,
    #[error("saved trace diverges from this configuration at evaluation {0}")]
    TraceMismatch(usize),
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// One order of magnitude either side of `v`, keeping its sign.
    pub fn decade(v: f64) -> Self {
        let (a, b) = (v / 10.0, v * 10.0);
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    fn logarithmic(&self) -> bool {
        self.lo != 0.0 && self.hi != 0.0 && self.lo.signum() == self.hi.signum()
    }

    /// Maps `u` in [0, 1] onto the interval, geometrically when the interval
    /// does not cross zero.
    fn at(&self, u: f64) -> f64 {
        if self.lo == self.hi || u <= 0.0 {
            return self.lo;
        }
        if u >= 1.0 {
            return self.hi;
        }
        if self.logarithmic() {
            let s = self.lo.signum();
            let (a, b) = ((self.lo * s).ln(), (self.hi * s).ln());
            let v = s * (a + (b - a) * u).exp();
            v.clamp(self.lo, self.hi)
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }

    fn unit(&self, v: f64) -> f64 {
        if self.lo == self.hi {
            return 0.5;
        }
        let u = if self.logarithmic() {
            let s = self.lo.signum();
            let (a, b) = ((self.lo * s).ln(), (self.hi * s).ln());
            ((v * s).ln() - a) / (b - a)
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        u.clamp(0.0, 1.0)
    }

    fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Search box over the nine free coefficients. `thresh` is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub alpha: Range,
    pub gamma: Range,
    pub zeta: Range,
    pub eta: Range,
    pub theta: Range,
    pub c1: Range,
    pub c2: Range,
    pub c3: Range,
    pub c4: Range,
    pub thresh: f64,
}

const DIMS: usize = 9;

impl Default for ParamSpace {
    fn default() -> Self {
        Self::around(&CostCoefficients::PROPOSED)
    }
}

impl ParamSpace {
    /// One decade either side of every coefficient of `c`.
    pub fn around(c: &CostCoefficients) -> Self {
        Self {
            alpha: Range::decade(c.alpha),
            gamma: Range::decade(c.gamma),
            zeta: Range::decade(c.zeta),
            eta: Range::decade(c.eta),
            theta: Range::decade(c.theta),
            c1: Range::decade(c.c1),
            c2: Range::decade(c.c2),
            c3: Range::decade(c.c3),
            c4: Range::decade(c.c4),
            thresh: c.thresh,
        }
    }

    /// The space holding only `c`.
    pub fn collapsed(c: &CostCoefficients) -> Self {
        Self {
            alpha: Range::point(c.alpha),
            gamma: Range::point(c.gamma),
            zeta: Range::point(c.zeta),
            eta: Range::point(c.eta),
            theta: Range::point(c.theta),
            c1: Range::point(c.c1),
            c2: Range::point(c.c2),
            c3: Range::point(c.c3),
            c4: Range::point(c.c4),
            thresh: c.thresh,
        }
    }

    fn ranges(&self) -> [(&'static str, Range); DIMS] {
        [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("eta", self.eta),
            ("theta", self.theta),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ]
    }

    pub fn validate(&self) -> Result<(), TuneError> {
        for (name, r) in self.ranges() {
            if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
                return Err(TuneError::Space(format!(
                    "{name}: [{}, {}] is not an interval",
                    r.lo, r.hi
                )));
            }
        }
        for (name, r) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("eta", self.eta),
        ] {
            if r.lo <= 0.0 {
                return Err(TuneError::Space(format!("{name} must stay positive")));
            }
        }
        for (name, r) in [("zeta", self.zeta), ("theta", self.theta)] {
            if r.hi >= 0.0 {
                return Err(TuneError::Space(format!("{name} must stay negative")));
            }
        }
        if self.thresh != 20.0 {
            return Err(TuneError::Space(format!(
                "thresh is fixed at 20 (got {})",
                self.thresh
            )));
        }
        Ok(())
    }

    pub fn contains(&self, c: &CostCoefficients) -> bool {
        let v = values(c);
        self.ranges().iter().zip(v).all(|((_, r), x)| r.contains(x)) && c.thresh == self.thresh
    }

    /// Coefficients at unit-cube coordinates `u`, with the type offsets
    /// sorted so their ordering holds.
    fn decode(&self, u: &[f64; DIMS]) -> CostCoefficients {
        let r = self.ranges();
        self.repaired(std::array::from_fn(|i| r[i].1.at(u[i])))
    }

    fn encode(&self, c: &CostCoefficients) -> [f64; DIMS] {
        let r = self.ranges();
        let v = values(c);
        std::array::from_fn(|i| r[i].1.unit(v[i]))
    }

    /// Nearest point of the space to `c`; `c` itself when inside.
    fn clamp(&self, c: &CostCoefficients) -> CostCoefficients {
        let r = self.ranges();
        let v = values(c);
        self.repaired(std::array::from_fn(|i| v[i].clamp(r[i].1.lo, r[i].1.hi)))
    }

    fn repaired(&self, v: [f64; DIMS]) -> CostCoefficients {
        let mut offsets = [v[5], v[6], v[7], v[8]];
        offsets.sort_by(f64::total_cmp);
        CostCoefficients {
            alpha: v[0],
            gamma: v[1],
            zeta: v[2],
            eta: v[3],
            theta: v[4],
            c1: offsets[0],
            c2: offsets[1],
            c3: offsets[2],
            c4: offsets[3],
            thresh: self.thresh,
        }
    }
}

fn values(c: &CostCoefficients) -> [f64; DIMS] {
    [
        c.alpha, c.gamma, c.zeta, c.eta, c.theta, c.c1, c.c2, c.c3, c.c4,
    ]
}

/// Losses of one coefficient set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean: f64,
    pub losses: Vec<f64>,
}

/// Runs one CBD episode per seed and scores each against the scenario's
/// bounds.
pub fn evaluate_coefficients(
    scenario: &Scenario,
    coeffs: &CostCoefficients,
    seeds: &[u64],
) -> Result<Evaluation, TuneError> {
    evaluate_on(std::slice::from_ref(scenario), coeffs, seeds)
}

/// Like [`evaluate_coefficients`], averaging over several scenarios. The
/// losses are listed scenario by scenario.
pub fn evaluate_on(
    scenarios: &[Scenario],
    coeffs: &CostCoefficients,
    seeds: &[u64],
) -> Result<Evaluation, TuneError> {
    coeffs.validate()?;
    if scenarios.is_empty() {
        return Err(TuneError::NoScenario);
    }
    if seeds.is_empty() {
        return Err(TuneError::Seeds);
    }
    let mut jobs = Vec::new();
    for s in scenarios {
        let bounds = s
            .bounds
            .ok_or_else(|| TuneError::NoBounds(s.name.clone()))?;
        let gt = s.ground_truth();
        for &seed in seeds {
            jobs.push((s, bounds, gt.clone(), seed));
        }
    }
    let losses = jobs
        .par_iter()
        .map(|(s, bounds, gt, seed)| {
            let r = run_episode(s, StrategyKind::Cbd, coeffs, *seed)?;
            Ok(loss(&r, gt, bounds)?)
        })
        .collect::<Result<Vec<f64>, TuneError>>()?;
    let mean = losses.iter().sum::<f64>() / losses.len() as f64;
    Ok(Evaluation { mean, losses })
}

/// One evaluated point of a tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub coeffs: CostCoefficients,
    pub mean_loss: f64,
    pub seeds: Vec<u64>,
    pub losses: Vec<f64>,
    /// Best mean loss among this and all earlier entries.
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best_coeffs: CostCoefficients,
    pub best_loss: f64,
    pub budget: usize,
    pub seeds_per_eval: usize,
    pub seed: u64,
    pub trace: Vec<TraceEntry>,
}

/// Knobs of the proposal loop. The defaults are what [`tune`] uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunerSettings {
    /// Candidates scored by the surrogate per proposal.
    pub pool: usize,
    /// Share of the pool drawn uniformly over the space.
    pub explore: f64,
    /// Neighbours the surrogate averages over.
    pub k: usize,
    /// Spread of the local candidates around good points, in unit-cube
    /// coordinates.
    pub step: f64,
}

impl Default for TunerSettings {
    fn default() -> Self {
        Self {
            pool: 512,
            explore: 0.25,
            k: 5,
            step: 0.08,
        }
    }
}

/// Inverse-distance-weighted mean of the `k` nearest observations.
fn predict(x: &[f64; DIMS], seen: &[([f64; DIMS], f64)], k: usize) -> f64 {
    let mut near: Vec<(f64, f64)> = seen.iter().map(|(p, y)| (dist2(p, x), *y)).collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    near.truncate(k.max(1));
    if let Some(&(_, y)) = near.iter().find(|(d, _)| *d == 0.0) {
        return y;
    }
    let (num, den) = near
        .iter()
        .fold((0.0, 0.0), |(n, d), (d2, y)| (n + y / d2, d + 1.0 / d2));
    num / den
}

fn dist2(a: &[f64; DIMS], b: &[f64; DIMS]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

const PRIMES: [u32; DIMS] = [2, 3, 5, 7, 11, 13, 17, 19, 23];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * inv;
        i /= b;
        inv /= base as f64;
    }
    out
}

/// Point `i` of a Halton sequence, rotated by `shift`.
fn halton(i: u64, shift: &[f64; DIMS]) -> [f64; DIMS] {
    std::array::from_fn(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
}

fn unit_point(rng: &mut ChaCha8Rng) -> [f64; DIMS] {
    std::array::from_fn(|_| rng.gen::<f64>())
}

/// Tunes on one scenario. See [`tune_with`].
pub fn tune(
    scenario: &Scenario,
    space: &ParamSpace,
    budget: usize,
    seeds_per_eval: usize,
    seed: u64,
) -> Result<TuneReport, TuneError> {
    tune_with(
        std::slice::from_ref(scenario),
        space,
        budget,
        seeds_per_eval,
        seed,
        &[],
        TunerSettings::default(),
        |_| {},
    )
}

/// Runs `budget` evaluations on seeds `0..seeds_per_eval` of every scenario.
///
/// Entries of `resume` are taken in place of evaluations, in order, so a
/// trace saved from an interrupted run continues to the same report. The
/// first point is the proposed coefficients (clamped into the space).
/// `on_entry` sees the trace after every evaluation.
#[allow(clippy::too_many_arguments)]
pub fn tune_with(
    scenarios: &[Scenario],
    space: &ParamSpace,
    budget: usize,
    seeds_per_eval: usize,
    seed: u64,
    resume: &[TraceEntry],
    settings: TunerSettings,
    mut on_entry: impl FnMut(&[TraceEntry]),
) -> Result<TuneReport, TuneError> {
    space.validate()?;
    if budget == 0 {
        return Err(TuneError::Budget(budget));
    }
    if seeds_per_eval == 0 {
        return Err(TuneError::Seeds);
    }
    if scenarios.is_empty() {
        return Err(TuneError::NoScenario);
    }
    let seeds: Vec<u64> = (0..seeds_per_eval as u64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = unit_point(&mut rng);
    let initial = (budget / 4).max(1);

    let mut trace: Vec<TraceEntry> = Vec::with_capacity(budget);
    let mut seen: Vec<([f64; DIMS], f64)> = Vec::with_capacity(budget);
    let mut halton_index = 1u64;

    while trace.len() < budget {
        let n = trace.len();
        let coeffs = if n == 0 {
            space.clamp(&CostCoefficients::PROPOSED)
        } else if n < initial {
            loop {
                let c = space.decode(&halton(halton_index, &shift));
                halton_index += 1;
                if c.validate().is_ok() {
                    break c;
                }
            }
        } else {
            propose(space, &seen, &mut rng, &settings)
        };

        let (mean, losses) = match resume.get(n) {
            Some(e) => {
                if e.coeffs != coeffs || e.seeds != seeds {
                    return Err(TuneError::TraceMismatch(n));
                }
                (e.mean_loss, e.losses.clone())
            }
            None => {
                let ev = evaluate_on(scenarios, &coeffs, &seeds)?;
                (ev.mean, ev.losses)
            }
        };
        let best_loss = trace.last().map_or(mean, |e| e.best_loss.min(mean));
        seen.push((space.encode(&coeffs), mean));
        trace.push(TraceEntry {
            coeffs,
            mean_loss: mean,
            seeds: seeds.clone(),
            losses,
            best_loss,
        });
        on_entry(&trace);
    }

    // first minimum wins
    let best = trace.iter().fold(
        &trace[0],
        |b, e| if e.mean_loss < b.mean_loss { e } else { b },
    );
    Ok(TuneReport {
        best_coeffs: best.coeffs,
        best_loss: best.mean_loss,
        budget,
        seeds_per_eval,
        seed,
        trace,
    })
}

/// Candidate with the lowest predicted loss from a pool mixing uniform
/// draws and perturbations of the best points so far.
fn propose(
    space: &ParamSpace,
    seen: &[([f64; DIMS], f64)],
    rng: &mut ChaCha8Rng,
    s: &TunerSettings,
) -> CostCoefficients {
    let mut ranked: Vec<usize> = (0..seen.len()).collect();
    ranked.sort_by(|&a, &b| seen[a].1.total_cmp(&seen[b].1).then(a.cmp(&b)));
    let elite = &ranked[..ranked.len().min(s.k.max(1))];
    let uniform = ((s.pool as f64) * s.explore).round() as usize;

    let mut best: Option<(f64, CostCoefficients)> = None;
    for i in 0..s.pool.max(1) {
        let u = if i < uniform {
            unit_point(rng)
        } else {
            let base = seen[elite[i % elite.len()]].0;
            std::array::from_fn(|d| {
                // sum of uniforms: cheap bell-shaped step
                let z: f64 = (0..4).map(|_| rng.gen::<f64>() - 0.5).sum();
                (base[d] + z * s.step).clamp(0.0, 1.0)
            })
        };
        let c = space.decode(&u);
        if c.validate().is_err() {
            continue;
        }
        // re-encode so sorting of the offsets is reflected
        let x = space.encode(&c);
        if seen.iter().any(|(p, _)| dist2(p, &x) < 1e-18) {
            continue;
        }
        let y = predict(&x, seen, s.k);
        if best.as_ref().is_none_or(|(b, _)| y < *b) {
            best = Some((y, c));
        }
    }
    // a fully collapsed space leaves nothing new to try
    best.map_or_else(|| space.decode(&unit_point(rng)), |(_, c)| c)
}
