use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lzheom::experiment::{self, OracleReport, Solve, Verdict, DEFAULT_MAX_DEPTH, ORACLE_TOL};
use lzheom::presets::{self, PRESET_NAMES};
use lzheom::pseudomode::DEFAULT_N_FOCK;
use lzheom::{parse_config, parse_grid, Error, RunConfig, SweepAxis};

/// Finite-time Landau-Zener sweeps of a qubit in a Lorentzian bath,
/// solved with the hierarchical equations of motion.
#[derive(Parser)]
#[command(name = "lzheom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write run.csv
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// converge depth and step to this fidelity tolerance first
        #[arg(long)]
        converge: Option<f64>,
    },
    /// Final fidelity over a parameter grid, written as sweep.csv
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// gamma | tf | td | Q
        #[arg(long)]
        axis: Option<String>,
        /// lin:a:b:n, log:a:b:n or a comma-separated list
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        converge: Option<f64>,
    },
    /// Reproduce a figure preset and check its expected features
    Preset {
        /// preset name, or `list`
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// fidelity tolerance for the depth and step search
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// run at the starting depth and step without converging
        #[arg(long)]
        fixed: bool,
    },
    /// Compare the hierarchy against the pseudomode reference
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = ORACLE_TOL)]
        tol: f64,
    },
    /// Search for the hierarchy depth and step that reach a tolerance
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code: 1 for bad input, 2 for numerics or
/// unmet expectations.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn numerical(message: String) -> Failure {
    Failure { code: 2, message }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(parse_config(&text)?)
}

fn solve_mode(converge: Option<f64>) -> Solve {
    converge.map_or(Solve::Fixed, Solve::converge)
}

fn verdict_result(report: &OracleReport, label: &str) -> Result<(), Failure> {
    println!("{label}oracle {}", report.summary());
    match report.verdict {
        Verdict::Pass => Ok(()),
        v => Err(numerical(format!("{label}oracle check {}", v.as_str()))),
    }
}

fn run_preset(name: &str, out: Option<&Path>, how: Solve, oracle: bool) -> Result<(), Failure> {
    if name == "list" {
        for n in PRESET_NAMES {
            println!("{n:6}  {}", presets::preset(n).map(|p| p.title).unwrap_or_default());
        }
        return Ok(());
    }
    let preset = presets::preset(name).ok_or_else(|| Failure {
        code: 1,
        message: format!("unknown preset `{name}` (try `lzheom preset list`)"),
    })?;
    let outcome = presets::run_preset(&preset, how, out)?;
    for c in &outcome.curves {
        println!(
            "{}: F(tf) = {:.6}, depth {}",
            c.label,
            c.solved.trace.final_fidelity(),
            c.solved.depth_used
        );
    }
    for s in &outcome.sweeps {
        let failed = s.rows.iter().filter(|r| !r.is_ok()).count();
        println!("{}: {} points over {}, {failed} not ok", s.label, s.rows.len(), s.axis.name());
    }
    for c in &outcome.checks {
        println!("[{}] {}", if c.passed { "ok" } else { "FAIL" }, c.detail);
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if oracle {
        // each coupled curve is checked at the depth it converged to
        let mut verdicts = Ok(());
        for c in outcome.curves.iter().filter(|c| c.config.bath.gamma > 0.0) {
            let sim = c.config.clone().with_depth(c.solved.depth_used);
            let report = experiment::oracle_report(&sim, DEFAULT_N_FOCK, ORACLE_TOL)?;
            verdicts = verdicts.and(verdict_result(&report, &format!("{}: ", c.label)));
        }
        verdicts?;
    }
    if outcome.all_passed() {
        Ok(())
    } else {
        Err(numerical(format!("preset {name}: expected features not met")))
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, out, converge } => {
            let cfg = load(&config)?;
            if let Some(name) = cfg.preset.clone() {
                let out = out.as_deref().or(cfg.out.as_deref());
                return run_preset(&name, out, solve_mode(converge), cfg.oracle);
            }
            let r = experiment::run(&cfg, out.as_deref(), solve_mode(converge))?;
            let trace = &r.solved.trace;
            println!(
                "F(tf) = {:.10}, min F = {:.10}, depth {}",
                trace.final_fidelity(),
                trace.min_fidelity(),
                r.solved.depth_used
            );
            for w in &trace.warnings {
                eprintln!("warning: {w:?}");
            }
            println!("wrote {}", r.path.display());
            if cfg.oracle && cfg.bath.gamma > 0.0 {
                let sim = cfg.simulation()?.with_depth(r.solved.depth_used);
                let report = experiment::oracle_report(&sim, cfg.n_fock, ORACLE_TOL)?;
                verdict_result(&report, "")?;
            }
            Ok(())
        }
        Command::Sweep { config, axis, grid, out, converge } => {
            let mut cfg = load(&config)?;
            match (axis, grid) {
                (Some(a), Some(g)) => {
                    let axis: SweepAxis = a.parse().map_err(|m| Failure { code: 1, message: m })?;
                    cfg.sweep = Some((axis, parse_grid(&g)?));
                }
                (None, None) => {}
                _ => {
                    return Err(Failure {
                        code: 1,
                        message: "--axis and --grid go together".into(),
                    })
                }
            }
            let s = experiment::sweep(&cfg, out.as_deref(), solve_mode(converge))?;
            for r in &s.rows {
                let f = r.final_fidelity.map_or("-".into(), |f| format!("{f:.6}"));
                println!("{} = {:<12.6} F(tf) = {f:<10} {}", s.axis.name(), r.value, r.status);
            }
            println!("wrote {}", s.path.display());
            if s.rows.iter().all(|r| r.is_ok()) {
                Ok(())
            } else {
                Err(numerical("some sweep points failed".into()))
            }
        }
        Command::Preset { name, out, tol, fixed } => {
            let how = if fixed { Solve::Fixed } else { Solve::converge(tol) };
            run_preset(&name, out.as_deref(), how, false)
        }
        Command::OracleCheck { config, out, tol } => {
            let cfg = load(&config)?;
            let report = experiment::oracle_check(&cfg, out.as_deref(), tol)?;
            verdict_result(&report, "")
        }
        Command::Converge { config, tol, max_depth, out } => {
            let cfg = load(&config)?;
            let r = experiment::run(&cfg, out.as_deref(), Solve::Converge { tol, max_depth })?;
            if let Some(rep) = &r.solved.report {
                println!("depth {}: {}", r.solved.depth_used, rep.summary());
            }
            println!("F(tf) = {:.10}", r.solved.trace.final_fidelity());
            println!("wrote {}", r.path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
