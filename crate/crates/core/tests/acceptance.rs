//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Preset outcomes are computed once (under depth and step convergence at
//! fidelity tolerance 1e-4) and shared between the criteria that read them.

use std::cell::RefCell;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::rc::Rc;
use std::time::Instant;

use lzheom::experiment::{oracle_report, physical, solve, Solve, Verdict, ORACLE_TOL};
use lzheom::heom::evolve;
use lzheom::presets::{self, prepare, refined_peak, start_depth, PresetOutcome, PRESET_NAMES};
use lzheom::pseudomode::DEFAULT_N_FOCK;
use lzheom::{
    correlation, dd_average_check, decompose, lz_probability, BathSpec, BiasSchedule, FidelityTrace,
    Mat2, ProtocolMode, ProtocolSpec, SimulationConfig,
};

const FIDELITY_TOL: f64 = 1e-4;

type Outcome = std::result::Result<String, String>;

/// Shared state: cached preset outcomes and every trace produced so far,
/// for the invariant sweep.
#[derive(Default)]
struct Ctx {
    presets: RefCell<HashMap<&'static str, Result<Rc<PresetOutcome>, String>>>,
    traces: RefCell<Vec<(String, bool, FidelityTrace)>>,
}

impl Ctx {
    fn preset(&self, name: &'static str) -> Result<Rc<PresetOutcome>, String> {
        if let Some(hit) = self.presets.borrow().get(name) {
            return hit.clone();
        }
        let p = presets::preset(name).ok_or(format!("no preset {name}"))?;
        let start = Instant::now();
        let result = presets::run_preset(&p, Solve::converge(FIDELITY_TOL), None)
            .map(Rc::new)
            .map_err(|e| e.to_string());
        eprintln!("  (ran {name} in {:.0?})", start.elapsed());
        if let Ok(o) = &result {
            for c in &o.curves {
                eprintln!(
                    "    {name}/{}: depth {} dt {} F_final {:.4}",
                    c.label,
                    c.solved.depth_used,
                    c.solved.report.as_ref().map_or(c.config.dt, |r| r.dt),
                    c.solved.trace.fidelity.last().copied().unwrap_or(f64::NAN)
                );
                let closed = c.config.bath.gamma == 0.0;
                self.record(format!("{name}/{}", c.label), closed, c.solved.trace.clone());
            }
        }
        self.presets.borrow_mut().insert(name, result.clone());
        result
    }

    fn record(&self, label: String, closed: bool, trace: FidelityTrace) {
        self.traces.borrow_mut().push((label, closed, trace));
    }

    /// All feature checks of the named presets; `Err` lists the failures.
    fn features(&self, names: &[&'static str]) -> Outcome {
        let mut lines = Vec::new();
        let mut failed = false;
        for &n in names {
            let o = self.preset(n)?;
            for c in &o.checks {
                failed |= !c.passed;
                lines.push(format!("{n}: {}{}", if c.passed { "" } else { "FAILED " }, c.detail));
            }
        }
        let text = lines.join("; ");
        if failed {
            Err(text)
        } else {
            Ok(text)
        }
    }
}

fn protocol(mode: ProtocolMode, tf: f64) -> ProtocolSpec {
    let schedule = match mode {
        ProtocolMode::Tcd => BiasSchedule::quintic(-6.0, 6.0, tf),
        _ => BiasSchedule::linear(-6.0, 6.0, tf),
    };
    ProtocolSpec::new(schedule, 0.5, mode)
}

fn bath(gamma: f64) -> BathSpec {
    BathSpec::transversal(gamma, 0.5, 0.5)
}

fn unitary_cd(ctx: &Ctx) -> Outcome {
    let mut worst = 0.0f64;
    for tf in [0.1, 5.0, 100.0] {
        let cfg = SimulationConfig::new(protocol(ProtocolMode::LzCd, tf), bath(0.0)).with_depth(start_depth(0.0));
        let trace = evolve(&cfg).map_err(|e| e.to_string())?;
        let dev = trace.fidelity.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);
        ctx.record(format!("lz_cd closed tf={tf}"), true, trace);
    }
    let text = format!("max |F(t) - 1| = {worst:.2e} over tf = 0.1, 5, 100");
    if worst < 1e-6 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn closed_lz(ctx: &Ctx) -> Outcome {
    let o = ctx.preset("fig1a")?;
    let f = o.curve("gamma_0").ok_or("missing curve")?.solved.trace.final_fidelity();
    let target = lz_probability(0.5, 12.0 / 100.0);
    let text = format!("F(tf) = {f:.6}, asymptotic {target:.6}, |diff| = {:.2e}", (f - target).abs());
    if (f - target).abs() <= 0.02 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn oracle(ctx: &Ctx) -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for mode in [ProtocolMode::LzCd, ProtocolMode::Tcd] {
        for gamma in [0.5, 1.0] {
            for tf in [1.0, 5.0] {
                let cfg = SimulationConfig::new(protocol(mode, tf), bath(gamma)).with_depth(start_depth(gamma).min(8));
                let solved = solve(&cfg, Solve::converge(1e-6)).map_err(|e| e.to_string())?;
                let cfg = cfg.with_depth(solved.depth_used);
                let r = oracle_report(&cfg, DEFAULT_N_FOCK, ORACLE_TOL).map_err(|e| e.to_string())?;
                let c = &r.comparison;
                worst = worst.max(c.max_trace_distance);
                if r.verdict != Verdict::Pass {
                    bad.push(format!("{mode:?} gamma={gamma} tf={tf}: {}", r.summary()));
                }
                ctx.record(format!("oracle heom {mode:?} {gamma} {tf}"), false, c.heom.clone());
                ctx.record(format!("oracle pseudomode {mode:?} {gamma} {tf}"), false, c.pseudomode.clone());
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("8 points, max trace distance {worst:.2e} (< {ORACLE_TOL:e})"))
    } else {
        Err(bad.join("; "))
    }
}

fn invariants(ctx: &Ctx) -> Outcome {
    for &name in PRESET_NAMES {
        ctx.preset(name)?;
    }
    let mut bad = Vec::new();
    let (mut purity_dev, mut purity_worst) = (0.0f64, String::new());
    let traces = ctx.traces.borrow();
    for (label, closed, trace) in traces.iter() {
        if let Err(e) = physical(trace) {
            bad.push(format!("{label}: {e}"));
        }
        if *closed {
            let dev = trace.diagnostics.iter().map(|d| (d.purity - 1.0).abs()).fold(0.0, f64::max);
            if dev > purity_dev {
                purity_dev = dev;
                purity_worst = label.clone();
            }
        }
    }
    let mut rows = 0;
    for &name in PRESET_NAMES {
        for s in &ctx.preset(name)?.sweeps {
            for r in &s.rows {
                rows += 1;
                if r.status.starts_with("invalid") {
                    bad.push(format!("{name}/{} at {}: {}", s.label, r.value, r.status));
                }
            }
        }
    }
    if purity_dev > 1e-8 {
        bad.push(format!("closed-system purity deviates by {purity_dev:e} ({purity_worst})"));
    }

    let t_d = 5.0 / presets::FIG5_Q;
    let mut dd = 0.0f64;
    for v in [Mat2::SIGMA_X, Mat2::SIGMA_Z] {
        let avg = Mat2::try_from(&dd_average_check(t_d, &v.into(), 4096).map_err(|e| e.to_string())?).unwrap();
        dd = dd.max(avg.max_abs());
    }
    if dd > 1e-12 {
        bad.push(format!("decoupling average {dd:e}"));
    }

    let mut recon = 0.0f64;
    for b in [bath(1.0), BathSpec::transversal(3.0, 0.2, 1.7)] {
        let d = decompose(&b);
        for k in 0..=400 {
            let t = k as f64 * 0.05;
            let exact = correlation(t, &b).map_err(|e| e.to_string())?;
            recon = recon.max((d.reconstruct(t) - exact).norm());
        }
    }
    if recon > 1e-12 {
        bad.push(format!("decomposition error {recon:e}"));
    }

    if bad.is_empty() {
        Ok(format!(
            "{} traces and {rows} sweep rows within density bounds; closed purity dev {purity_dev:.1e}; \
             decoupling average {dd:.1e}; C(t) reconstruction {recon:.1e}",
            traces.len()
        ))
    } else {
        Err(bad.join("; "))
    }
}

/// One scalar acceptance number, recomputed at doubled depth and halved
/// step.
struct Number {
    name: String,
    tol: f64,
    holds: Box<dyn Fn(f64) -> bool>,
    /// `variant = 0` is the converged setting, 1 doubles depth, 2 halves dt
    eval: Box<dyn Fn(usize) -> Result<f64, String>>,
}

fn variant(cfg: &SimulationConfig, depth: usize, which: usize) -> SimulationConfig {
    match which {
        0 => cfg.clone().with_depth(depth),
        1 => cfg.clone().with_depth(2 * depth),
        _ => cfg.clone().with_depth(depth).with_dt(cfg.dt / 2.0),
    }
}

fn curve_number(
    o: &PresetOutcome,
    label: &str,
    tol: f64,
    pick: fn(&FidelityTrace) -> f64,
    holds: Box<dyn Fn(f64) -> bool>,
) -> Result<Number, String> {
    let c = o.curve(label).ok_or(format!("{}: missing {label}", o.name))?;
    let (cfg, depth, base) = (c.config.clone(), c.solved.depth_used, pick(&c.solved.trace));
    Ok(Number {
        name: format!("{}/{label}", o.name),
        tol,
        holds,
        eval: Box::new(move |w| match w {
            0 => Ok(base),
            _ => evolve(&variant(&cfg, depth, w)).map(|t| pick(&t)).map_err(|e| e.to_string()),
        }),
    })
}

/// Final fidelities of a preset sweep, each row at its own converged depth.
fn sweep_finals(name: &'static str, label: &str, o: &PresetOutcome, w: usize) -> Result<Vec<(f64, f64)>, String> {
    let spec = presets::preset(name)
        .and_then(|p| p.sweeps.into_iter().find(|s| s.label == label))
        .ok_or(format!("{name}: no sweep {label}"))?;
    let rows = &o.sweep(label).ok_or(format!("{name}: no result for {label}"))?.rows;
    rows.iter()
        .map(|r| {
            let f = r.final_fidelity.ok_or(format!("{name}/{label} at {}: {}", r.value, r.status))?;
            if w == 0 {
                return Ok((r.value, f));
            }
            let cfg = spec.base.with_axis(spec.axis, r.value).and_then(|c| c.simulation());
            let cfg = prepare(cfg.map_err(|e| e.to_string())?);
            let depth = r.depth_used.unwrap_or(cfg.depth);
            let t = evolve(&variant(&cfg, depth, w)).map_err(|e| e.to_string())?;
            Ok((r.value, t.final_fidelity()))
        })
        .collect()
}

fn acceptance_numbers(ctx: &Ctx) -> Result<Vec<Number>, String> {
    let final_f: fn(&FidelityTrace) -> f64 = |t| t.final_fidelity();
    let min_f: fn(&FidelityTrace) -> f64 = |t| t.min_fidelity();
    let fig1a = ctx.preset("fig1a")?;
    let fig5 = ctx.preset("fig5")?;
    let fig2b = ctx.preset("fig2b")?;
    let target = lz_probability(0.5, 0.12);
    let mut v = vec![
        curve_number(&fig1a, "gamma_0", 0.02, final_f, Box::new(move |f| (f - target).abs() <= 0.02))?,
        curve_number(&fig5, "cd", 0.05, final_f, Box::new(|f| (f - 0.80).abs() <= 0.05))?,
        curve_number(&fig5, "cd_dd", 0.02, final_f, Box::new(|f| (f - 0.97).abs() <= 0.02))?,
    ];
    for g in ["gamma_0.5", "gamma_1", "gamma_5"] {
        v.push(curve_number(&fig2b, g, 0.01, min_f, Box::new(|f| f >= 0.99))?);
    }

    let o5 = fig5.clone();
    v.push(Number {
        name: "fig5/q peak location".into(),
        tol: 0.05,
        holds: Box::new(|q| (5.8..=6.0).contains(&q) && q < 6.0),
        eval: Box::new(move |w| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = sweep_finals("fig5", "q", &o5, w)?.into_iter().unzip();
            refined_peak(&xs, &ys).map(|p| p.0).ok_or("no interior peak".into())
        }),
    });
    let fig4b = ctx.preset("fig4b")?;
    for (i, gamma) in [0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let o = fig4b.clone();
        let holds: Box<dyn Fn(f64) -> bool> = if gamma == 1.0 {
            Box::new(|d| d < -0.01)
        } else {
            Box::new(|d| d <= 0.005)
        };
        v.push(Number {
            name: format!("fig4b F_tcd - F_cd at gamma {gamma}"),
            tol: 0.005,
            holds,
            eval: Box::new(move |w| {
                let tcd = sweep_finals("fig4b", "tcd", &o, w)?;
                let cd = sweep_finals("fig4b", "cd", &o, w)?;
                Ok(tcd[i].1 - cd[i].1)
            }),
        });
    }
    Ok(v)
}

fn convergence(ctx: &Ctx) -> Outcome {
    let mut bad = Vec::new();
    for &name in PRESET_NAMES {
        match ctx.preset(name) {
            Err(e) => bad.push(format!("{name}: {e}")),
            Ok(o) => {
                for s in &o.sweeps {
                    for r in s.rows.iter().filter(|r| !r.is_ok()) {
                        bad.push(format!("{name}/{} at {}: {}", s.label, r.value, r.status));
                    }
                }
            }
        }
    }
    let mut worst = Vec::new();
    for n in acceptance_numbers(ctx)? {
        let base = (n.eval)(0)?;
        let mut shift = 0.0f64;
        for w in [1, 2] {
            let x = (n.eval)(w)?;
            shift = shift.max((x - base).abs());
            if (x - base).abs() > n.tol || !(n.holds)(x) {
                let what = if w == 1 { "doubled depth" } else { "halved dt" };
                bad.push(format!("{}: {base:.6} -> {x:.6} at {what} (tol {})", n.name, n.tol));
            }
        }
        worst.push(format!("{} {shift:.1e}", n.name));
    }
    if bad.is_empty() {
        Ok(format!(
            "all {} presets converged; largest shifts: {}",
            PRESET_NAMES.len(),
            worst.join(", ")
        ))
    } else {
        Err(bad.join("; "))
    }
}

fn main() -> ExitCode {
    let ctx = Ctx::default();
    let criteria: [(&str, &dyn Fn(&Ctx) -> Outcome); 10] = [
        ("unitary CD exactness", &unitary_cd),
        ("closed-system LZ benchmark", &closed_lz),
        ("oracle equivalence", &oracle),
        ("fig5 decoupling", &|c| c.features(&["fig5"])),
        ("fast CD robustness (fig2b)", &|c| c.features(&["fig2b"])),
        ("non-monotonicity (fig1b)", &|c| c.features(&["fig1b"])),
        ("CD-can-hurt crossing (fig3)", &|c| c.features(&["fig3a", "fig3b"])),
        ("TCD vs CD ordering (fig4)", &|c| c.features(&["fig4a", "fig4b"])),
        ("invariant suite", &invariants),
        ("convergence discipline", &convergence),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&ctx)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.0} s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name} ({secs:.0} s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
