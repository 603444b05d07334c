//! Figure presets: parameter sets, sweeps and the qualitative features each
//! one is expected to show.
//!
//! Every preset runs end to end with no further input. Curves are
//! time-resolved runs written as `<label>.csv`; sweeps are final-fidelity
//! tables written the same way. Runs start from a depth scaled with the
//! coupling (see [`start_depth`]) and long sweeps start from a coarser step;
//! with [`Solve::Converge`] both are then checked rather than trusted.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{lin_grid, log_grid, RunConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::experiment::{
    guarded, physical, solve, sweep_csv, sweep_rows, trace_csv, OutputGuard, Solve, Solved, SweepRow,
};
use crate::heom::SimulationConfig;
use crate::observables::{find_extrema, sign_changes, ExtremumKind};
use crate::protocol::{BiasSchedule, ProtocolMode};

/// Noise floor for extremum detection on final-fidelity curves.
pub const EXTREMA_NOISE_FLOOR: f64 = 1e-3;

pub const PRESET_NAMES: &[&str] = &[
    "fig1a", "fig1b", "fig1c", "fig1d", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5",
];

/// Starting hierarchy depth for coupling `gamma`: 2 for a closed system,
/// otherwise the even number at or above `3γ + 8`. Measured convergence
/// depths at `tf = 100` sit just below this line up to `γ = 20`.
pub fn start_depth(gamma: f64) -> usize {
    if gamma == 0.0 {
        return 2;
    }
    let d = (3.0 * gamma + 8.0).ceil() as usize;
    d + d % 2
}

/// Coupling grid for the final-fidelity sweeps: 25 log-spaced points on
/// `[0.01, 20]`, wide enough to pass the strong-coupling maximum at
/// `tf = 100`.
pub fn gamma_grid() -> Vec<f64> {
    log_grid(0.01, 20.0, 25)
}

/// Duration grid: 25 log-spaced points on `[0.1, 500]`.
pub fn tf_grid() -> Vec<f64> {
    log_grid(0.1, 500.0, 25)
}

#[derive(Debug, Clone)]
pub struct Curve {
    pub label: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub label: String,
    pub base: RunConfig,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

/// Expected qualitative or scalar feature of a preset's output.
#[derive(Debug, Clone, PartialEq)]
pub enum Feature {
    /// `|F(tf) − target| ≤ tol`
    FinalFidelity { curve: String, target: f64, tol: f64 },
    /// `min_t F(t) ≥ bound`
    MinFidelityAtLeast { curve: String, bound: f64 },
    /// `F_lower(tf) < F_higher(tf) − margin`
    FinalBelow { lower: String, higher: String, margin: f64 },
    /// an interior minimum followed by an interior maximum
    MinThenMax { sweep: String },
    NoInteriorExtrema { sweep: String },
    /// at least one interior extremum
    NonMonotone { sweep: String },
    /// `F_a − F_b` changes sign on the grid
    Crossing { a: String, b: String },
    /// `F_lower ≤ F_upper + slack` pointwise, and below by more than
    /// `margin` at `at`
    OrderedBelow { lower: String, upper: String, slack: f64, at: f64, margin: f64 },
    /// location of the largest final fidelity in `[lo, hi]` and `< below`
    PeakInRange { sweep: String, lo: f64, hi: f64, below: f64 },
    /// largest final fidelity on the grid is `target ± tol`
    PeakFidelity { sweep: String, target: f64, tol: f64 },
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub title: &'static str,
    pub curves: Vec<Curve>,
    pub sweeps: Vec<SweepSpec>,
    pub features: Vec<Feature>,
}

fn base(mode: ProtocolMode, tf: f64, gamma: f64) -> RunConfig {
    let mut c = RunConfig::default();
    c.protocol.mode = mode;
    c.protocol.schedule = match mode {
        ProtocolMode::Tcd => BiasSchedule::quintic(-6.0, 6.0, tf),
        _ => BiasSchedule::linear(-6.0, 6.0, tf),
    };
    c.bath.gamma = gamma;
    c.depth = start_depth(gamma);
    c
}

fn curve(label: impl Into<String>, config: RunConfig) -> Curve {
    Curve {
        label: label.into(),
        config,
    }
}

fn gamma_label(g: f64) -> String {
    format!("gamma_{g}")
}

fn gamma_curves(mode: ProtocolMode, tf: f64, gammas: &[f64]) -> Vec<Curve> {
    gammas
        .iter()
        .map(|&g| curve(gamma_label(g), base(mode, tf, g)))
        .collect()
}

fn sweep(label: &str, base: RunConfig, axis: SweepAxis, grid: Vec<f64>) -> SweepSpec {
    SweepSpec {
        label: label.into(),
        base,
        axis,
        grid,
    }
}

/// Q value used for the decoupled curve of `fig5`.
pub const FIG5_Q: f64 = 5.94;

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<Preset> {
    use Feature::*;
    use ProtocolMode::*;
    let s = |x: &str| x.to_string();
    let p = match name {
        "fig1a" => Preset {
            name: "fig1a",
            title: "F(t) of the bare sweep at tf = 100 for several couplings",
            curves: gamma_curves(Lz, 100.0, &[0.0, 0.1, 1.0, 5.0]),
            sweeps: vec![],
            features: vec![FinalFidelity {
                curve: gamma_label(0.0),
                target: crate::observables::lz_probability(0.5, 0.12),
                tol: 0.02,
            }],
        },
        "fig1b" => Preset {
            name: "fig1b",
            title: "F(tf) of the bare sweep against coupling for tf = 100, 20, 10, 1",
            curves: vec![],
            sweeps: [100.0, 20.0, 10.0, 1.0]
                .iter()
                .map(|&tf| sweep(&format!("tf_{tf}"), base(Lz, tf, 0.0), SweepAxis::Gamma, gamma_grid()))
                .collect(),
            features: vec![
                MinThenMax { sweep: s("tf_100") },
                NoInteriorExtrema { sweep: s("tf_1") },
            ],
        },
        "fig1c" => Preset {
            name: "fig1c",
            title: "F(t) of the bare sweep at coupling 5 for tf = 0.1, 5, 50, 500",
            curves: [0.1, 5.0, 50.0, 500.0]
                .iter()
                .map(|&tf| curve(format!("tf_{tf}"), base(Lz, tf, 5.0)))
                .collect(),
            sweeps: vec![],
            features: ["tf_5", "tf_50", "tf_500"]
                .iter()
                .map(|h| FinalBelow {
                    lower: s("tf_0.1"),
                    higher: s(h),
                    margin: 0.0,
                })
                .collect(),
        },
        "fig1d" => Preset {
            name: "fig1d",
            title: "F(tf) of the bare sweep against duration for couplings 0.1, 1, 5",
            curves: vec![],
            sweeps: [0.1, 1.0, 5.0]
                .iter()
                .map(|&g| sweep(&gamma_label(g), base(Lz, 100.0, g), SweepAxis::Tf, tf_grid()))
                .collect(),
            features: [0.1, 1.0, 5.0]
                .iter()
                .map(|&g| NonMonotone { sweep: gamma_label(g) })
                .collect(),
        },
        "fig2a" | "fig2b" => {
            let (tf, name, title) = if name == "fig2a" {
                (5.0, "fig2a", "F(t) under LZ + CD at tf = 5")
            } else {
                (0.1, "fig2b", "F(t) under LZ + CD at tf = 0.1")
            };
            let gammas = [0.0, 0.5, 1.0, 5.0];
            let mut features = vec![FinalFidelity {
                curve: gamma_label(0.0),
                target: 1.0,
                tol: 1e-6,
            }];
            if tf < 1.0 {
                features.extend(gammas[1..].iter().map(|&g| MinFidelityAtLeast {
                    curve: gamma_label(g),
                    bound: 0.99,
                }));
            }
            Preset {
                name,
                title,
                curves: gamma_curves(LzCd, tf, &gammas),
                sweeps: vec![],
                features,
            }
        }
        "fig3a" | "fig3b" => {
            let (tf, name, title) = if name == "fig3a" {
                (2.0, "fig3a", "F(tf) with and without CD against coupling, tf = 2")
            } else {
                (10.0, "fig3b", "F(tf) with and without CD against coupling, tf = 10")
            };
            Preset {
                name,
                title,
                curves: vec![],
                sweeps: vec![
                    sweep("lz", base(Lz, tf, 0.0), SweepAxis::Gamma, gamma_grid()),
                    sweep("lz_cd", base(LzCd, tf, 0.0), SweepAxis::Gamma, gamma_grid()),
                ],
                features: vec![Crossing { a: s("lz_cd"), b: s("lz") }],
            }
        }
        "fig4a" => Preset {
            name: "fig4a",
            title: "F(t) under CD (linear ramp) and transformed CD (quintic ramp), tf = 1, coupling 1",
            curves: vec![curve("cd", base(LzCd, 1.0, 1.0)), curve("tcd", base(Tcd, 1.0, 1.0))],
            sweeps: vec![],
            features: vec![FinalBelow {
                lower: s("tcd"),
                higher: s("cd"),
                margin: 0.01,
            }],
        },
        "fig4b" => Preset {
            name: "fig4b",
            title: "F(tf) under CD and transformed CD against coupling, tf = 1",
            curves: vec![],
            sweeps: vec![
                sweep("cd", base(LzCd, 1.0, 0.0), SweepAxis::Gamma, vec![0.5, 1.0, 2.0, 5.0]),
                sweep("tcd", base(Tcd, 1.0, 0.0), SweepAxis::Gamma, vec![0.5, 1.0, 2.0, 5.0]),
            ],
            features: vec![OrderedBelow {
                lower: s("tcd"),
                upper: s("cd"),
                slack: 0.005,
                at: 1.0,
                margin: 0.01,
            }],
        },
        "fig5" => {
            let mut dd = base(CdOnlyDd, 5.0, 1.0);
            dd.protocol.t_d = Some(5.0 / FIG5_Q);
            let q_grid = lin_grid(5.70, 6.20, 26);
            Preset {
                name: "fig5",
                title: "F(t) at tf = 5, coupling 1: closed CD reference, CD with bath, CD + decoupling",
                curves: vec![
                    curve("reference", base(LzCd, 5.0, 0.0)),
                    curve("cd", base(LzCd, 5.0, 1.0)),
                    curve("cd_dd", dd.clone()),
                ],
                sweeps: vec![sweep("q", dd, SweepAxis::Q, q_grid)],
                features: vec![
                    FinalFidelity { curve: s("reference"), target: 1.0, tol: 1e-6 },
                    FinalFidelity { curve: s("cd"), target: 0.80, tol: 0.05 },
                    FinalFidelity { curve: s("cd_dd"), target: 0.97, tol: 0.02 },
                    PeakInRange { sweep: s("q"), lo: 5.8, hi: 6.0, below: 6.0 },
                    PeakFidelity { sweep: s("q"), target: 0.97, tol: 0.02 },
                ],
            }
        }
        _ => return None,
    };
    Some(p)
}

#[derive(Debug, Clone)]
pub struct CurveResult {
    pub label: String,
    pub config: SimulationConfig,
    pub solved: Solved,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub label: String,
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// `(value, F(tf))` for the rows that completed.
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter_map(|r| r.final_fidelity.map(|f| (r.value, f)))
            .unzip()
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(SweepRow::is_ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCheck {
    pub feature: Feature,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct PresetOutcome {
    pub name: &'static str,
    pub curves: Vec<CurveResult>,
    pub sweeps: Vec<SweepResult>,
    pub checks: Vec<FeatureCheck>,
    pub files: Vec<PathBuf>,
}

impl PresetOutcome {
    pub fn curve(&self, label: &str) -> Option<&CurveResult> {
        self.curves.iter().find(|c| c.label == label)
    }

    pub fn sweep(&self, label: &str) -> Option<&SweepResult> {
        self.sweeps.iter().find(|s| s.label == label)
    }

    /// Every run completed with valid states and every feature holds.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
            && self.sweeps.iter().all(SweepResult::all_ok)
            && self.curves.iter().all(|c| c.solved.trace.diagnostics.iter().all(|d| d.is_valid()))
    }
}

/// Vertex of the parabola through the grid maximum and its neighbours, or
/// the grid maximum itself at an endpoint. Returns `(x, y)`.
pub fn refined_peak(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let (i, _) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if i == 0 || i + 1 >= ys.len() {
        return Some((xs[i], ys[i]));
    }
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a >= 0.0 {
        return Some((x1, y1));
    }
    let b = d01 - a * (x0 + x1);
    let c = y0 - (a * x0 + b) * x0;
    let xv = -b / (2.0 * a);
    Some((xv, (a * xv + b) * xv + c))
}

fn evaluate(feature: &Feature, curves: &[CurveResult], sweeps: &[SweepResult]) -> FeatureCheck {
    let find_curve = |l: &str| curves.iter().find(|c| c.label == l);
    let find_sweep = |l: &str| sweeps.iter().find(|s| s.label == l);
    let fail = |detail: String| FeatureCheck {
        feature: feature.clone(),
        passed: false,
        detail,
    };
    let result = |passed: bool, detail: String| FeatureCheck {
        feature: feature.clone(),
        passed,
        detail,
    };
    match feature {
        Feature::FinalFidelity { curve, target, tol } => match find_curve(curve) {
            Some(c) => {
                let f = c.solved.trace.final_fidelity();
                result((f - target).abs() <= *tol, format!("{curve}: F(tf) = {f:.6}, want {target} ± {tol}"))
            }
            None => fail(format!("no curve `{curve}`")),
        },
        Feature::MinFidelityAtLeast { curve, bound } => match find_curve(curve) {
            Some(c) => {
                let m = c.solved.trace.min_fidelity();
                result(m >= *bound, format!("{curve}: min F = {m:.6}, want >= {bound}"))
            }
            None => fail(format!("no curve `{curve}`")),
        },
        Feature::FinalBelow { lower, higher, margin } => match (find_curve(lower), find_curve(higher)) {
            (Some(l), Some(h)) => {
                let (fl, fh) = (l.solved.trace.final_fidelity(), h.solved.trace.final_fidelity());
                result(
                    fl < fh - margin,
                    format!("{lower}: {fl:.6} vs {higher}: {fh:.6} (margin {margin})"),
                )
            }
            _ => fail(format!("missing curve `{lower}` or `{higher}`")),
        },
        Feature::MinThenMax { sweep } | Feature::NoInteriorExtrema { sweep } | Feature::NonMonotone { sweep } => {
            let Some(s) = find_sweep(sweep) else {
                return fail(format!("no sweep `{sweep}`"));
            };
            if !s.all_ok() {
                return fail(format!("{sweep}: not every grid point completed"));
            }
            let (xs, ys) = s.points();
            let ext = find_extrema(&xs, &ys, EXTREMA_NOISE_FLOOR);
            let listing: Vec<String> = ext
                .iter()
                .map(|e| format!("{}@{:.4}", if e.kind == ExtremumKind::Min { "min" } else { "max" }, e.x))
                .collect();
            let detail = format!("{sweep}: extrema [{}]", listing.join(", "));
            let passed = match feature {
                Feature::MinThenMax { .. } => ext
                    .iter()
                    .position(|e| e.kind == ExtremumKind::Min)
                    .is_some_and(|i| ext[i..].iter().any(|e| e.kind == ExtremumKind::Max)),
                Feature::NoInteriorExtrema { .. } => ext.is_empty(),
                _ => !ext.is_empty(),
            };
            result(passed, detail)
        }
        Feature::Crossing { a, b } => match (find_sweep(a), find_sweep(b)) {
            (Some(sa), Some(sb)) if sa.all_ok() && sb.all_ok() => {
                let (xa, ya) = sa.points();
                let (_, yb) = sb.points();
                let idx = sign_changes(&ya, &yb);
                let at: Vec<String> = idx.iter().map(|&i| format!("{:.4}..{:.4}", xa[i], xa[i + 1])).collect();
                result(!idx.is_empty(), format!("{a} - {b} changes sign in [{}]", at.join(", ")))
            }
            _ => fail(format!("sweep `{a}` or `{b}` missing or incomplete")),
        },
        Feature::OrderedBelow { lower, upper, slack, at, margin } => match (find_sweep(lower), find_sweep(upper)) {
            (Some(sl), Some(su)) if sl.all_ok() && su.all_ok() => {
                let (xs, yl) = sl.points();
                let (_, yu) = su.points();
                let worst = yl.iter().zip(&yu).map(|(l, u)| l - u).fold(f64::NEG_INFINITY, f64::max);
                let gap_at = xs
                    .iter()
                    .position(|x| (x - at).abs() < 1e-12)
                    .map(|i| yu[i] - yl[i]);
                let passed = worst <= *slack && gap_at.is_some_and(|g| g > *margin);
                result(
                    passed,
                    format!(
                        "max({lower} - {upper}) = {worst:.6} (slack {slack}); gap at {at} = {}",
                        gap_at.map_or("n/a".into(), |g| format!("{g:.6}"))
                    ),
                )
            }
            _ => fail(format!("sweep `{lower}` or `{upper}` missing or incomplete")),
        },
        Feature::PeakInRange { sweep, lo, hi, below } => match find_sweep(sweep) {
            Some(s) if s.all_ok() => {
                let (xs, ys) = s.points();
                match refined_peak(&xs, &ys) {
                    Some((x, _)) => result(
                        x >= *lo && x <= *hi && x < *below,
                        format!("{sweep}: peak at {x:.4}, want within [{lo}, {hi}] and below {below}"),
                    ),
                    None => fail(format!("{sweep}: empty")),
                }
            }
            _ => fail(format!("sweep `{sweep}` missing or incomplete")),
        },
        Feature::PeakFidelity { sweep, target, tol } => match find_sweep(sweep) {
            Some(s) if s.all_ok() => {
                let (_, ys) = s.points();
                let m = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                result((m - target).abs() <= *tol, format!("{sweep}: peak F(tf) = {m:.6}, want {target} ± {tol}"))
            }
            _ => fail(format!("sweep `{sweep}` missing or incomplete")),
        },
    }
}

/// Per-run starting point: depth from the coupling, and for long open-system
/// sweeps a coarse step of 1e-2 trimmed by the stability guard. With
/// [`Solve::Converge`] the dt-halving check decides whether that holds.
/// Closed systems keep the default step: they are cheap, and RK4's norm
/// drift at 1e-2 over tf = 100 already reaches a few 1e-8 in purity.
pub fn prepare(mut c: SimulationConfig) -> SimulationConfig {
    c.depth = c.depth.max(start_depth(c.bath.gamma));
    if c.protocol.tf() >= 50.0 && c.bath.gamma > 0.0 {
        c = c.with_dt(1e-2);
    }
    guarded(c)
}

/// Runs every curve and sweep of `preset`, checks its features and, with an
/// output directory, writes one CSV per curve and sweep plus a gnuplot
/// script. Engine failures of a curve abort the preset (and remove files
/// already written); failures of single sweep points are recorded.
pub fn run_preset(preset: &Preset, how: Solve, out: Option<&Path>) -> Result<PresetOutcome> {
    let mut curves = Vec::with_capacity(preset.curves.len());
    for c in &preset.curves {
        let sim = prepare(c.config.simulation()?);
        let solved = solve(&sim, how)
            .and_then(|s| physical(&s.trace).map(|()| s))
            .map_err(|e| annotate(e, preset.name, &c.label))?;
        curves.push(CurveResult {
            label: c.label.clone(),
            config: sim,
            solved,
        });
    }
    let sweeps: Vec<SweepResult> = preset
        .sweeps
        .iter()
        .map(|s| SweepResult {
            label: s.label.clone(),
            axis: s.axis,
            rows: sweep_rows(&s.base, s.axis, &s.grid, how, prepare),
        })
        .collect();
    let checks = preset
        .features
        .iter()
        .map(|f| evaluate(f, &curves, &sweeps))
        .collect();

    let mut files = Vec::new();
    if let Some(dir) = out {
        let mut guard = OutputGuard::new();
        for c in &curves {
            guard.write(dir.join(format!("{}.csv", c.label)), &trace_csv(&c.solved.trace))?;
        }
        for s in &sweeps {
            guard.write(dir.join(format!("{}.csv", s.label)), &sweep_csv(s.axis, &s.rows))?;
        }
        guard.write(dir.join(format!("{}.gp", preset.name)), &gnuplot_script(preset))?;
        files = guard.commit();
    }
    Ok(PresetOutcome {
        name: preset.name,
        curves,
        sweeps,
        checks,
        files,
    })
}

fn annotate(e: Error, preset: &str, label: &str) -> Error {
    match e {
        Error::NotConverged { what, delta, tol } => Error::NotConverged {
            what: format!("{preset}/{label}: {what}"),
            delta,
            tol,
        },
        Error::InvalidDensity(v) => Error::InvalidDensity(format!("{preset}/{label}: {v}")),
        other => other,
    }
}

/// Plot script for the CSVs written by [`run_preset`]; run it from the
/// output directory.
pub fn gnuplot_script(preset: &Preset) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}: {}", preset.name, preset.title);
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    if !preset.curves.is_empty() {
        let _ = writeln!(s, "set xlabel 't/tf'\nset ylabel 'F(t)'");
        let parts: Vec<String> = preset
            .curves
            .iter()
            .map(|c| {
                format!(
                    "'{}.csv' using ($1/{}):2 with lines title '{}'",
                    c.label,
                    c.config.protocol.tf(),
                    c.label
                )
            })
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    if let Some(first) = preset.sweeps.first() {
        if !preset.curves.is_empty() {
            let _ = writeln!(s, "pause -1");
        }
        if matches!(first.axis, SweepAxis::Gamma | SweepAxis::Tf) && first.grid.iter().all(|&x| x > 0.0) {
            let _ = writeln!(s, "set logscale x");
        }
        let _ = writeln!(s, "set xlabel '{}'\nset ylabel 'F(tf)'", first.axis.name());
        let parts: Vec<String> = preset
            .sweeps
            .iter()
            .map(|w| format!("'{}.csv' using 2:3 with linespoints title '{}'", w.label, w.label))
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ScheduleKind;

    #[test]
    fn every_named_preset_exists_and_validates() {
        for name in PRESET_NAMES {
            let p = preset(name).unwrap_or_else(|| panic!("{name}"));
            assert_eq!(p.name, *name);
            assert!(!p.curves.is_empty() || !p.sweeps.is_empty());
            assert!(!p.features.is_empty(), "{name} has no expected features");
            for c in &p.curves {
                c.config.validate().unwrap();
            }
            for s in &p.sweeps {
                for &v in &s.grid {
                    s.base.with_axis(s.axis, v).unwrap();
                }
            }
        }
        assert!(preset("fig6").is_none());
    }

    #[test]
    fn fig4_pairs_linear_cd_with_quintic_tcd() {
        let p = preset("fig4a").unwrap();
        assert_eq!(p.curves[0].config.protocol.schedule.kind, ScheduleKind::Linear);
        assert_eq!(p.curves[1].config.protocol.schedule.kind, ScheduleKind::Quintic);
    }

    #[test]
    fn start_depth_grows_with_coupling() {
        assert_eq!(start_depth(0.0), 2);
        assert_eq!(start_depth(1.0), 12);
        assert_eq!(start_depth(10.0), 38);
        assert!(start_depth(0.01) % 2 == 0);
    }

    #[test]
    fn grids_match_their_description() {
        let g = gamma_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[24] - 20.0).abs() < 1e-12);
        let t = tf_grid();
        assert!((t[0] - 0.1).abs() < 1e-15 && (t[24] - 500.0).abs() < 1e-10);
    }

    #[test]
    fn refined_peak_recovers_parabola_vertex() {
        let xs = lin_grid(0.0, 2.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - (x - 0.93) * (x - 0.93)).collect();
        let (x, y) = refined_peak(&xs, &ys).unwrap();
        assert!((x - 0.93).abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
        assert_eq!(refined_peak(&[0.0, 1.0], &[2.0, 1.0]), Some((0.0, 2.0)));
        assert_eq!(refined_peak(&[], &[]), None);
    }

    #[test]
    fn small_preset_runs_and_writes_files() {
        // fig4a is cheap: tf = 1 at coupling 1
        let p = preset("fig4a").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = run_preset(&p, Solve::Fixed, Some(dir.path())).unwrap();
        assert_eq!(out.files.len(), 3);
        for f in &out.files {
            assert!(f.exists());
        }
        assert!(out.all_passed(), "{:?}", out.checks);
        assert!(gnuplot_script(&p).contains("'cd.csv'"));
    }
}
