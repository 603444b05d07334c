//! Batch runs, parameter sweeps, oracle cross-checks and CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{RunConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::heom::{auto_converge, evolve, ConvergenceReport, SimulationConfig, STABILITY_LIMIT};
use crate::observables::FidelityTrace;
use crate::pseudomode::{oracle_compare, OracleComparison};

pub const RUN_HEADER: &str = "t,fidelity,trace_re,trace_im,purity,min_eigenvalue";
pub const SWEEP_HEADER: &str = "param,value,final_fidelity,depth_used,status,wall_ms";

/// Largest depth [`Solve::Converge`] will try unless told otherwise.
pub const DEFAULT_MAX_DEPTH: usize = 96;

/// How a single configuration is turned into a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solve {
    /// one evolution at the configured depth and step
    Fixed,
    /// [`auto_converge`] starting from the configured depth
    Converge { tol: f64, max_depth: usize },
}

impl Solve {
    pub fn converge(tol: f64) -> Self {
        Solve::Converge {
            tol,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub trace: FidelityTrace,
    pub depth_used: usize,
    pub report: Option<ConvergenceReport>,
}

pub fn solve(cfg: &SimulationConfig, how: Solve) -> Result<Solved> {
    match how {
        Solve::Fixed => Ok(Solved {
            trace: evolve(cfg)?,
            depth_used: cfg.depth,
            report: None,
        }),
        Solve::Converge { tol, max_depth } => {
            let c = auto_converge(cfg, tol, max_depth)?;
            Ok(Solved {
                trace: c.trace,
                depth_used: c.depth_used,
                report: Some(c.report),
            })
        }
    }
}

/// Shrinks `cfg.dt` to one significant digit until the stability guard
/// holds. Configurations already inside the guard are returned unchanged.
pub fn guarded(mut cfg: SimulationConfig) -> SimulationConfig {
    let m = cfg.stability_measure();
    if m > STABILITY_LIMIT {
        let target = cfg.effective_dt() * STABILITY_LIMIT / m;
        let scale = 10f64.powf(target.log10().floor());
        let dt = (target / scale).floor() * scale;
        let every = cfg.sample_every;
        let ratio = (cfg.effective_dt() / dt).round().max(1.0) as usize;
        cfg.dt = dt;
        cfg.sample_every = every * ratio;
    }
    cfg
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// One line per sample under [`RUN_HEADER`].
pub fn trace_csv(trace: &FidelityTrace) -> String {
    let mut s = String::with_capacity(64 * (trace.len() + 1));
    s.push_str(RUN_HEADER);
    s.push('\n');
    for ((t, f), d) in trace.times.iter().zip(&trace.fidelity).zip(&trace.diagnostics) {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(*t),
            fmt(*f),
            fmt(d.trace.re),
            fmt(d.trace.im),
            fmt(d.purity),
            fmt(d.min_eigenvalue)
        ));
    }
    s
}

/// Outcome of one sweep grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub final_fidelity: Option<f64>,
    pub depth_used: Option<usize>,
    /// `ok`, `invalid: …` when a sampled state breaks the density bounds, or
    /// `error: …` when the run failed
    pub status: String,
    pub wall_ms: u128,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn trace_status(trace: &FidelityTrace) -> String {
    match physical(trace) {
        Err(Error::InvalidDensity(v)) => format!("invalid: {v}"),
        _ => "ok".into(),
    }
}

/// Fails with [`Error::InvalidDensity`] at the first sample whose reduced
/// state breaks the density bounds.
pub fn physical(trace: &FidelityTrace) -> Result<()> {
    let bad = trace
        .diagnostics
        .iter()
        .zip(&trace.times)
        .find_map(|(d, t)| d.violation().map(|v| format!("{v} at t = {t}")));
    match bad {
        Some(v) => Err(Error::InvalidDensity(v)),
        None => Ok(()),
    }
}

/// Runs every grid point independently (in parallel) and returns rows in
/// grid order. `prepare` may adjust each point's configuration before it
/// runs, e.g. to pick a starting depth.
pub fn sweep_rows<F>(base: &RunConfig, axis: SweepAxis, grid: &[f64], how: Solve, prepare: F) -> Vec<SweepRow>
where
    F: Fn(SimulationConfig) -> SimulationConfig + Sync,
{
    grid.par_iter()
        .map(|&value| {
            let start = Instant::now();
            let outcome = base
                .with_axis(axis, value)
                .and_then(|c| c.simulation())
                .and_then(|c| solve(&prepare(c), how));
            let wall_ms = start.elapsed().as_millis();
            match outcome {
                Ok(s) => SweepRow {
                    value,
                    final_fidelity: Some(s.trace.final_fidelity()),
                    depth_used: Some(s.depth_used),
                    status: trace_status(&s.trace),
                    wall_ms,
                },
                Err(e) => SweepRow {
                    value,
                    final_fidelity: None,
                    depth_used: None,
                    status: format!("error: {e}"),
                    wall_ms,
                },
            }
        })
        .collect()
}

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            axis.name(),
            fmt(r.value),
            r.final_fidelity.map(fmt).unwrap_or_default(),
            r.depth_used.map(|d| d.to_string()).unwrap_or_default(),
            status,
            r.wall_ms
        ));
    }
    s
}

/// Files written so far in one operation; removed again unless committed.
pub(crate) struct OutputGuard {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    pub(crate) fn new() -> Self {
        Self {
            paths: Vec::new(),
            committed: false,
        }
    }

    pub(crate) fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        self.paths.push(path.clone());
        let mut f = fs::File::create(&path)?;
        f.write_all(contents.as_bytes())?;
        Ok(())
    }

    pub(crate) fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.paths)
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn out_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub path: PathBuf,
    pub solved: Solved,
}

/// Evolves one configuration and writes `<out>/run.csv`.
pub fn run(cfg: &RunConfig, out: Option<&Path>, how: Solve) -> Result<RunOutput> {
    let sim = cfg.simulation()?;
    let solved = solve(&sim, how)?;
    physical(&solved.trace)?;
    let path = out_dir(cfg, out).join("run.csv");
    let mut guard = OutputGuard::new();
    guard.write(path.clone(), &trace_csv(&solved.trace))?;
    guard.commit();
    Ok(RunOutput { path, solved })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub path: PathBuf,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

/// Runs the configured sweep and writes `<out>/sweep.csv`. Failed points are
/// recorded in the status column rather than aborting the table.
pub fn sweep(cfg: &RunConfig, out: Option<&Path>, how: Solve) -> Result<SweepOutput> {
    let (axis, grid) = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::param("axis", "no sweep axis configured"))?;
    // bad input is rejected before anything runs; only numerical failures
    // end up in the status column
    for &v in &grid {
        cfg.with_axis(axis, v)?.simulation()?;
    }
    let rows = sweep_rows(cfg, axis, &grid, how, |c| c);
    let path = out_dir(cfg, out).join("sweep.csv");
    let mut guard = OutputGuard::new();
    guard.write(path.clone(), &sweep_csv(axis, &rows))?;
    guard.commit();
    Ok(SweepOutput { path, axis, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// the pseudomode reference stayed cutoff limited
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub verdict: Verdict,
    pub tol: f64,
    pub comparison: OracleComparison,
}

impl OracleReport {
    pub fn summary(&self) -> String {
        let c = &self.comparison;
        format!(
            "{}: max trace distance {:.3e}, max |dF| {:.3e} (tol {:e}, n_fock {})",
            self.verdict.as_str(),
            c.max_trace_distance,
            c.max_fidelity_delta,
            self.tol,
            c.n_fock_used
        )
    }
}

pub const ORACLE_TOL: f64 = 1e-3;

/// Hierarchy against the pseudomode reference at the configured depth and
/// Fock cutoff. With an output directory, both traces are written as
/// `heom.csv` and `pseudomode.csv`.
pub fn oracle_check(cfg: &RunConfig, out: Option<&Path>, tol: f64) -> Result<OracleReport> {
    if !(cfg.bath.gamma > 0.0) {
        return Err(Error::param("gamma", "oracle check needs gamma > 0"));
    }
    let report = oracle_report(&cfg.simulation()?, cfg.n_fock, tol)?;
    if let Some(dir) = out.map(Path::to_path_buf).or_else(|| cfg.out.clone()) {
        let mut guard = OutputGuard::new();
        guard.write(dir.join("heom.csv"), &trace_csv(&report.comparison.heom))?;
        guard.write(dir.join("pseudomode.csv"), &trace_csv(&report.comparison.pseudomode))?;
        guard.commit();
    }
    Ok(report)
}

/// The comparison behind [`oracle_check`], without writing files.
pub fn oracle_report(sim: &SimulationConfig, n_fock: usize, tol: f64) -> Result<OracleReport> {
    let comparison = oracle_compare(sim, n_fock)?;
    let verdict = if comparison.is_inconclusive() {
        Verdict::Inconclusive
    } else if comparison.agrees(tol) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(OracleReport {
        verdict,
        tol,
        comparison,
    })
}
