//! Command-line front end.
//!
//! Exit codes: 0 when every requested episode completed (or the command is
//! not an episode run), 2 when a single run ended on a time limit or got
//! stuck, 1 on any error.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::gridmap::{GridMap, Point};
use crate::metrics::{estimate_lower_bounds, BatchSummary, RunSummary, COMPLETENESS_THRESHOLD};
use crate::sim::{run_episode, EpisodeResult, PathPoint, Scenario, Termination};
use crate::strategy::{CostCoefficients, StrategyKind};
use crate::tuner::{tune_with, ParamSpace, TuneReport, TunerSettings};

#[derive(Debug, Parser)]
#[command(
    name = "dynexplore",
    version,
    about = "Frontier exploration among moving people"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode and write its metrics, path and final map.
    Run(RunArgs),
    /// Run seeds 0..n for one or both strategies and summarise them.
    Batch(BatchArgs),
    /// Search cost coefficients that minimise the CBD loss.
    Tune(TuneArgs),
    /// Estimate the loss bounds of a scenario from a batch of runs.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Cost coefficients as JSON; the proposed set when absent.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "cbd")]
    pub strategy: StrategyKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the ground truth and the path drawn over the final map.
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Only this strategy; both when absent.
    #[arg(long)]
    pub strategy: Option<StrategyKind>,
    #[arg(long, default_value_t = 24, allow_negative_numbers = true)]
    pub n: i64,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Scenario files; the objective averages over all of them.
    #[arg(long, required = true)]
    pub scenario: Vec<PathBuf>,
    /// Search space as JSON; one decade around the proposed set when absent.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long, default_value_t = 50, allow_negative_numbers = true)]
    pub budget: i64,
    #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
    pub seeds_per_eval: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trace or report written by an earlier, possibly interrupted, run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 24, allow_negative_numbers = true)]
    pub n: i64,
    /// Skip the first seeds so the calibration batch differs from the
    /// evaluation batch.
    #[arg(long, default_value_t = 1000)]
    pub first_seed: u64,
}

type CliResult = Result<i32, String>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let res = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Batch(a) => cmd_batch(&a),
        Command::Tune(a) => cmd_tune(&a),
        Command::Calibrate(a) => cmd_calibrate(&a),
    };
    match res {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, String> {
    Scenario::load(path).map_err(|e| e.to_string())
}

fn load_coeffs(path: Option<&Path>) -> Result<CostCoefficients, String> {
    let c = match path {
        None => CostCoefficients::PROPOSED,
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
    };
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}

fn json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, String> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| e.to_string())?;
    s.push(b'\n');
    Ok(s)
}

/// `t,x,y` rows with a header.
pub fn path_csv(path: &[PathPoint]) -> String {
    let mut s = String::from("t,x,y\n");
    for p in path {
        s.push_str(&format!("{:.3},{:.4},{:.4}\n", p.t, p.x, p.y));
    }
    s
}

/// Final map with the driven path painted white.
fn path_overlay(map: &GridMap, path: &[PathPoint]) -> Vec<u8> {
    let mut pgm = map.to_pgm();
    let header = pgm.len() - map.width() * map.height();
    for p in path {
        let c = map.cell_at(Point::new(p.x, p.y));
        if map.contains(c) {
            // PGM rows run top to bottom
            let row = map.height() - 1 - c.y as usize;
            pgm[header + row * map.width() + c.x as usize] = 255;
        }
    }
    pgm
}

fn summarise(s: &Scenario, r: &EpisodeResult, gt: &GridMap) -> Result<RunSummary, String> {
    RunSummary::new(r, gt, s.bounds.as_ref()).map_err(|e| e.to_string())
}

fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::Complete => 0,
        Termination::TimeLimit | Termination::Stuck => 2,
    }
}

pub fn cmd_run(a: &RunArgs) -> CliResult {
    let s = load_scenario(&a.common.scenario)?;
    let coeffs = load_coeffs(a.common.coeffs.as_deref())?;
    let r = run_episode(&s, a.strategy, &coeffs, a.seed).map_err(|e| e.to_string())?;
    let gt = s.ground_truth();
    let summary = summarise(&s, &r, &gt)?;

    let out = &a.common.out;
    create_dir(out)?;
    let stem = format!("{}_seed{}", a.strategy, a.seed);
    let body = json(&summary)?;
    write_file(&out.join(format!("{stem}.json")), &body)?;
    write_file(
        &out.join(format!("{stem}_path.csv")),
        path_csv(&r.path).as_bytes(),
    )?;
    write_file(&out.join(format!("{stem}_map.pgm")), &r.final_map.to_pgm())?;
    if a.render {
        write_file(&out.join("ground_truth.pgm"), &gt.to_pgm())?;
        write_file(
            &out.join(format!("{stem}_trace.pgm")),
            &path_overlay(&r.final_map, &r.path),
        )?;
    }
    std::io::stdout()
        .write_all(&body)
        .map_err(|e| e.to_string())?;
    Ok(exit_code(r.termination))
}

fn positive(name: &str, v: i64) -> Result<usize, String> {
    if v < 1 {
        return Err(format!("--{name} must be at least 1 (got {v})"));
    }
    Ok(v as usize)
}

/// Runs seeds `first..first + n` of each strategy, in that order.
fn run_batch(
    s: &Scenario,
    kinds: &[StrategyKind],
    coeffs: &CostCoefficients,
    first: u64,
    n: usize,
) -> Result<Vec<RunSummary>, String> {
    let gt = s.ground_truth();
    let jobs: Vec<(StrategyKind, u64)> = kinds
        .iter()
        .flat_map(|&k| (first..first + n as u64).map(move |seed| (k, seed)))
        .collect();
    jobs.par_iter()
        .map(|&(k, seed)| {
            let r = run_episode(s, k, coeffs, seed).map_err(|e| e.to_string())?;
            summarise(s, &r, &gt)
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

pub fn cmd_batch(a: &BatchArgs) -> CliResult {
    let n = positive("n", a.n)?;
    let s = load_scenario(&a.common.scenario)?;
    let coeffs = load_coeffs(a.common.coeffs.as_deref())?;
    let kinds = match a.strategy {
        Some(k) => vec![k],
        None => vec![StrategyKind::Cbd, StrategyKind::Cf],
    };
    let runs = run_batch(&s, &kinds, &coeffs, 0, n)?;

    let mut csv = String::from(
        "strategy,seed,loss,duration_s,length_m,ineffective_ratio,divergence,termination\n",
    );
    for r in &runs {
        csv.push_str(&format!(
            "{},{},{},{:.3},{:.4},{:.6},{:.6},{}\n",
            r.strategy,
            r.seed,
            fmt_opt(r.loss),
            r.duration_s,
            r.length_m,
            r.ineffective_ratio,
            r.divergence,
            serde_json::to_value(r.termination)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
        ));
    }
    let batch = BatchSummary::new(&s.name, s.bounds, runs);
    create_dir(&a.common.out)?;
    write_file(&a.common.out.join("summary.json"), &json(&batch)?)?;
    write_file(&a.common.out.join("losses.csv"), csv.as_bytes())?;

    let mut stdout = BufWriter::new(std::io::stdout());
    let _ = writeln!(
        stdout,
        "{:<8}{:>6}{:>22}{:>22}{:>20}{:>20}{:>20}",
        "", "done", "duration [s]", "length [m]", "ineffective", "divergence", "loss"
    );
    for k in &batch.summary {
        let pm = |m: f64, sd: f64, p: usize| format!("{m:.p$} ± {sd:.p$}");
        let _ = writeln!(
            stdout,
            "{:<8}{:>6}{:>22}{:>22}{:>20}{:>20}{:>20}",
            k.strategy.to_string(),
            format!("{}/{}", k.completed, k.runs),
            pm(k.duration_s.mean, k.duration_s.std, 1),
            pm(k.length_m.mean, k.length_m.std, 1),
            pm(k.ineffective_ratio.mean, k.ineffective_ratio.std, 3),
            pm(k.divergence.mean, k.divergence.std, 3),
            k.loss.map_or("-".into(), |l| pm(l.mean, l.std, 2)),
        );
    }
    Ok(0)
}

fn load_resume(path: &Path) -> Result<Vec<crate::tuner::TraceEntry>, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if let Ok(report) = serde_json::from_str::<TuneReport>(&text) {
        return Ok(report.trace);
    }
    serde_json::from_str(&text)
        .map_err(|e| format!("{}: not a trace or report: {e}", path.display()))
}

/// The coefficient table: one row per coefficient.
pub fn coeff_table(c: &CostCoefficients, loss: f64) -> String {
    let rows = [
        ("alpha", c.alpha),
        ("gamma", c.gamma),
        ("zeta", c.zeta),
        ("eta", c.eta),
        ("theta", c.theta),
        ("c1", c.c1),
        ("c2", c.c2),
        ("c3", c.c3),
        ("c4", c.c4),
        ("thresh", c.thresh),
    ];
    let mut s = String::new();
    for (name, v) in rows {
        s.push_str(&format!("{name:<8}{v:>12.4}\n"));
    }
    s.push_str(&format!("{:<8}{loss:>12.4}\n", "loss"));
    s
}

pub fn cmd_tune(a: &TuneArgs) -> CliResult {
    let budget = positive("budget", a.budget)?;
    let seeds = positive("seeds-per-eval", a.seeds_per_eval)?;
    let scenarios = a
        .scenario
        .iter()
        .map(|p| load_scenario(p))
        .collect::<Result<Vec<_>, _>>()?;
    let space = match &a.space {
        None => ParamSpace::default(),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
    };
    let resume = match &a.resume {
        Some(p) => load_resume(p)?,
        None => Vec::new(),
    };
    create_dir(&a.out)?;
    let trace_path = a.out.join("tune_trace.json");
    let report = tune_with(
        &scenarios,
        &space,
        budget,
        seeds,
        a.seed,
        &resume,
        TunerSettings::default(),
        |trace| {
            // best effort: a failed checkpoint only costs a resume
            if let Ok(body) = json(&trace) {
                let _ = fs::write(&trace_path, body);
            }
        },
    )
    .map_err(|e| e.to_string())?;
    write_file(&a.out.join("tune_report.json"), &json(&report)?)?;
    print!("{}", coeff_table(&report.best_coeffs, report.best_loss));
    Ok(0)
}

pub fn cmd_calibrate(a: &CalibrateArgs) -> CliResult {
    let n = positive("n", a.n)?;
    let mut s = load_scenario(&a.scenario)?;
    s.bounds = None;
    let runs = run_batch(
        &s,
        &[StrategyKind::Cbd, StrategyKind::Cf],
        &CostCoefficients::PROPOSED,
        a.first_seed,
        n,
    )?;
    let (l, t) = estimate_lower_bounds(&runs, COMPLETENESS_THRESHOLD).map_err(|e| e.to_string())?;
    println!("[bounds]\nlength = {l:.2}\ntime = {t:.1}");
    Ok(0)
}
