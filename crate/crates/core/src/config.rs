//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # LZ sweep with CD, coupled to the bath
//! protocol = lz_cd
//! tf = 5
//! gamma = 1
//! ```
//!
//! Blank lines and `#` comments are ignored; keys are case-insensitive.
//! Anything left out falls back to the standard sweep (`X = 0.5`,
//! `Z: −6 → 6`, `λ = ω_c = 0.5`, `γ = 0`, bare LZ, `tf = 100`).

use std::path::PathBuf;
use std::str::FromStr;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::heom::{default_dt, default_sample_every, SimulationConfig, DEFAULT_DEPTH};
use crate::protocol::{BiasSchedule, ProtocolMode, ProtocolSpec, ScheduleKind};
use crate::pseudomode::{PseudomodeConfig, DEFAULT_N_FOCK};

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Gamma,
    Tf,
    /// decoupling period `t_D`
    Td,
    /// `Q = tf/t_D` at fixed `tf`
    Q,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::Tf => "tf",
            SweepAxis::Td => "td",
            SweepAxis::Q => "Q",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(SweepAxis::Gamma),
            "tf" => Ok(SweepAxis::Tf),
            "td" | "t_d" => Ok(SweepAxis::Td),
            "q" => Ok(SweepAxis::Q),
            _ => Err(format!("unknown sweep axis `{s}` (expected gamma | tf | td | Q)")),
        }
    }
}

/// Parses a grid spec: `lin:a:b:n`, `log:a:b:n` or a comma-separated list.
/// The result is finite, nonempty and strictly monotone.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::param("grid", m);
    let spec = spec.trim();
    let values = if let Some(rest) = spec.strip_prefix("lin:").or_else(|| spec.strip_prefix("log:")) {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!("`{spec}`: expected kind:start:stop:count")));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| bad(format!("bad start `{}`", parts[0])))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad(format!("bad stop `{}`", parts[1])))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad(format!("bad count `{}`", parts[2])))?;
        if n == 0 {
            return Err(bad("count must be positive".into()));
        }
        if spec.starts_with("log:") {
            if !(a > 0.0 && b > 0.0) {
                return Err(bad("log grid needs positive bounds".into()));
            }
            log_grid(a, b, n)
        } else {
            lin_grid(a, b, n)
        }
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("bad value `{s}`"))))
            .collect::<Result<Vec<_>>>()?
    };
    check_grid(&values)?;
    Ok(values)
}

pub fn lin_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.log10(), b.log10());
    lin_grid(la, lb, n).into_iter().map(|x| 10f64.powf(x)).collect()
}

fn check_grid(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param("grid", "empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("grid", "values must be finite"));
    }
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::param("grid", "values must be strictly ordered"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: ProtocolSpec,
    pub bath: BathSpec,
    pub depth: usize,
    /// `None` picks a step from `tf`
    pub dt: Option<f64>,
    pub sample_every: Option<usize>,
    pub n_fock: usize,
    pub out: Option<PathBuf>,
    pub preset: Option<String>,
    pub sweep: Option<(SweepAxis, Vec<f64>)>,
    pub oracle: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolSpec::new(BiasSchedule::linear(-6.0, 6.0, 100.0), 0.5, ProtocolMode::Lz),
            bath: BathSpec::default(),
            depth: DEFAULT_DEPTH,
            dt: None,
            sample_every: None,
            n_fock: DEFAULT_N_FOCK,
            out: None,
            preset: None,
            sweep: None,
            oracle: false,
        }
    }
}

impl RunConfig {
    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(self.protocol.tf()))
    }

    pub fn sample_every(&self) -> usize {
        self.sample_every
            .unwrap_or_else(|| default_sample_every(self.protocol.tf(), self.dt()))
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let cfg = SimulationConfig::new(self.protocol, self.bath)
            .with_depth(self.depth)
            .with_dt(self.dt())
            .with_sample_every(self.sample_every());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn pseudomode(&self) -> Result<PseudomodeConfig> {
        let cfg = PseudomodeConfig::matching(&self.simulation()?, self.n_fock);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Copy with one sweep parameter set. `Q` and `td` switch decoupling on.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Gamma => c.bath.gamma = value,
            SweepAxis::Tf => {
                let q = c.protocol.q_ratio();
                c.protocol.schedule.tf = value;
                // keep the ratio when sweeping duration under decoupling
                if let Some(q) = q {
                    c.protocol.t_d = Some(value / q);
                }
            }
            SweepAxis::Td => c.protocol.t_d = Some(value),
            SweepAxis::Q => {
                if !(value > 0.0) {
                    return Err(Error::param("Q", format!("must be positive, got {value}")));
                }
                c.protocol.t_d = Some(c.protocol.tf() / value);
            }
        }
        if matches!(axis, SweepAxis::Td | SweepAxis::Q) && c.protocol.mode != ProtocolMode::CdOnlyDd {
            return Err(Error::param(
                "axis",
                format!("sweeping {} needs protocol = cd_only_dd", axis.name()),
            ));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation()?;
        if self.n_fock < 2 {
            return Err(Error::param("n_fock", "needs at least 2 levels"));
        }
        if let Some((_, grid)) = &self.sweep {
            check_grid(grid)?;
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "protocol", "schedule", "z0", "zf", "x", "tf", "gamma", "lambda", "omega_c", "gz", "gx", "depth",
    "dt", "sample_every", "td", "q", "n_fock", "out", "preset", "axis", "grid", "oracle",
];

/// Keys that only steer the run, allowed alongside `preset`.
const RUN_KEYS: &[&str] = &["out", "preset", "oracle"];

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut seen: Vec<(&'static str, usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = k.trim().to_ascii_lowercase();
        let key = KEYS.iter().find(|&&known| known == key).ok_or_else(|| Error::Config {
            line,
            message: format!("unknown key `{}`", k.trim()),
        })?;
        if let Some((_, first, _)) = seen.iter().find(|(s, _, _)| s == key) {
            return Err(Error::Config {
                line,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
        seen.push((key, line, v.trim().to_string()));
    }

    let line_of = |key: &str| seen.iter().find(|(k, _, _)| *k == key).map(|(_, l, _)| *l);
    let get = |key: &str| seen.iter().find(|(k, _, _)| *k == key).map(|(_, l, v)| (*l, v.as_str()));
    fn parse<T: FromStr>(key: &str, line: usize, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::Config {
            line,
            message: format!("cannot parse `{v}` for `{key}`"),
        })
    }
    let num = |key: &str| -> Result<Option<f64>> {
        get(key).map(|(l, v)| parse::<f64>(key, l, v)).transpose()
    };

    if let Some((line, _)) = get("preset") {
        if let Some((k, _, _)) = seen.iter().find(|(k, _, _)| !RUN_KEYS.contains(k)) {
            return Err(Error::Config {
                line: line_of(k).unwrap_or(line),
                message: format!("`{k}` cannot be combined with `preset`"),
            });
        }
    }

    let mut cfg = RunConfig::default();
    let mode = match get("protocol") {
        Some((l, v)) => v.parse::<ProtocolMode>().map_err(|m| Error::Config { line: l, message: m })?,
        None => ProtocolMode::Lz,
    };
    let kind = match get("schedule") {
        Some((l, v)) => v.parse::<ScheduleKind>().map_err(|m| Error::Config { line: l, message: m })?,
        // the transformed protocol only exists on the quintic ramp
        None if mode == ProtocolMode::Tcd => ScheduleKind::Quintic,
        None => ScheduleKind::Linear,
    };
    let sched = BiasSchedule {
        kind,
        z0: num("z0")?.unwrap_or(-6.0),
        zf: num("zf")?.unwrap_or(6.0),
        tf: num("tf")?.unwrap_or(100.0),
    };
    cfg.protocol = ProtocolSpec::new(sched, num("x")?.unwrap_or(0.5), mode);
    match (num("td")?, num("q")?) {
        (Some(_), Some(_)) => {
            return Err(Error::Config {
                line: line_of("q").unwrap_or(0),
                message: "set either `td` or `q`, not both".into(),
            })
        }
        (Some(td), None) => cfg.protocol.t_d = Some(td),
        (None, Some(q)) => cfg.protocol.t_d = Some(sched.tf / q),
        (None, None) => {}
    }
    cfg.bath = BathSpec {
        gamma: num("gamma")?.unwrap_or(0.0),
        lambda: num("lambda")?.unwrap_or(0.5),
        omega_c: num("omega_c")?.unwrap_or(0.5),
        g_z: num("gz")?.unwrap_or(0.0),
        g_x: num("gx")?.unwrap_or(0.5),
    };
    if let Some((l, v)) = get("depth") {
        cfg.depth = parse("depth", l, v)?;
    }
    cfg.dt = num("dt")?;
    if let Some((l, v)) = get("sample_every") {
        cfg.sample_every = Some(parse("sample_every", l, v)?);
    }
    if let Some((l, v)) = get("n_fock") {
        cfg.n_fock = parse("n_fock", l, v)?;
    }
    cfg.out = get("out").map(|(_, v)| PathBuf::from(v));
    cfg.preset = get("preset").map(|(_, v)| v.to_string());
    if let Some((l, v)) = get("oracle") {
        cfg.oracle = parse("oracle", l, v)?;
    }
    match (get("axis"), get("grid")) {
        (Some((l, a)), Some((lg, g))) => {
            let axis = a.parse::<SweepAxis>().map_err(|m| Error::Config { line: l, message: m })?;
            let grid = parse_grid(g).map_err(|e| Error::Config {
                line: lg,
                message: e.to_string(),
            })?;
            cfg.sweep = Some((axis, grid));
        }
        (Some((l, _)), None) | (None, Some((l, _))) => {
            return Err(Error::Config {
                line: l,
                message: "`axis` and `grid` must be given together".into(),
            })
        }
        (None, None) => {}
    }

    if cfg.preset.is_none() {
        cfg.validate().map_err(|e| Error::Config {
            line: blame(&e, &seen),
            message: e.to_string(),
        })?;
    }
    Ok(cfg)
}

/// Line of the key most likely responsible for a validation error, or 0.
fn blame(e: &Error, seen: &[(&'static str, usize, String)]) -> usize {
    let name = match e {
        Error::InvalidParameter { name, .. } => name.to_ascii_lowercase(),
        _ => return 0,
    };
    let candidates: &[&str] = match name.as_str() {
        "z0/zf" => &["z0", "zf"],
        "bath" => &["omega_c", "gz", "gx"],
        "schedule" => &["schedule", "protocol"],
        "td" => &["td", "q", "protocol"],
        other => return seen.iter().find(|(k, _, _)| *k == other).map(|(_, l, _)| *l).unwrap_or(0),
    };
    candidates
        .iter()
        .find_map(|c| seen.iter().find(|(k, _, _)| k == c).map(|(_, l, _)| *l))
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_standard_sweep() {
        let c = parse_config("").unwrap();
        assert_eq!(c.protocol.x, 0.5);
        assert_eq!((c.protocol.schedule.z0, c.protocol.schedule.zf), (-6.0, 6.0));
        assert_eq!((c.bath.lambda, c.bath.omega_c, c.bath.gamma), (0.5, 0.5, 0.0));
        assert_eq!(c.protocol.mode, ProtocolMode::Lz);
        assert_eq!(c.protocol.schedule.kind, ScheduleKind::Linear);
        assert_eq!(c.dt(), 1e-3);
    }

    #[test]
    fn negative_gamma_names_its_line() {
        let err = parse_config("tf = 5\ngamma = -1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn tcd_on_linear_schedule_is_rejected() {
        let err = parse_config("protocol = tcd\nschedule = linear\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let ok = parse_config("protocol = tcd\n").unwrap();
        assert_eq!(ok.protocol.schedule.kind, ScheduleKind::Quintic);
    }

    #[test]
    fn unknown_duplicate_and_malformed_lines() {
        assert!(matches!(parse_config("# hi\nfoo = 1"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse_config("tf = 1\ntf = 2"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(parse_config("tf 1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(parse_config("depth = 2.5"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn full_document_round_trip() {
        let text = "\
            protocol = cd_only_dd   # decoupled\n\
            tf = 5\n\
            Q = 5.94\n\
            gamma = 1\n\
            depth = 12\n\
            dt = 1e-3\n\
            sample_every = 50\n\
            n_fock = 20\n\
            out = results/fig5\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.protocol.mode, ProtocolMode::CdOnlyDd);
        assert!((c.protocol.q_ratio().unwrap() - 5.94).abs() < 1e-12);
        assert_eq!((c.depth, c.sample_every, c.n_fock), (12, Some(50), 20));
        assert_eq!(c.out.as_deref(), Some(std::path::Path::new("results/fig5")));
        let sim = c.simulation().unwrap();
        assert_eq!(sim.sample_every, 50);
    }

    #[test]
    fn dd_needs_a_period() {
        assert!(matches!(parse_config("protocol = cd_only_dd"), Err(Error::Config { line: 1, .. })));
        assert!(parse_config("protocol = cd_only_dd\ntd = 1\nq = 5").is_err());
    }

    #[test]
    fn preset_excludes_physics_keys() {
        assert!(parse_config("preset = fig5\nout = x").is_ok());
        assert!(matches!(parse_config("preset = fig5\ngamma = 1"), Err(Error::Config { line: 2, .. })));
    }

    #[test]
    fn sweep_keys_come_in_pairs() {
        let c = parse_config("axis = gamma\ngrid = 0.1, 0.5, 1").unwrap();
        assert_eq!(c.sweep, Some((SweepAxis::Gamma, vec![0.1, 0.5, 1.0])));
        assert!(parse_config("axis = gamma").is_err());
        assert!(parse_config("axis = gamma\ngrid = 1, 1").is_err());
    }

    #[test]
    fn grid_specs() {
        assert_eq!(parse_grid("lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("log:0.01:10:25").unwrap();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[24] - 10.0).abs() < 1e-12);
        assert!((g[8] - 0.1).abs() < 1e-14);
        assert_eq!(parse_grid("3,2,1").unwrap(), vec![3.0, 2.0, 1.0]);
        for bad in ["", "1,2,2", "log:0:1:3", "lin:0:1", "1,x", "lin:0:1:0", "1,inf"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn axis_application() {
        let base = parse_config("protocol = cd_only_dd\ntf = 5\nq = 6").unwrap();
        let c = base.with_axis(SweepAxis::Q, 5.94).unwrap();
        assert!((c.protocol.t_d.unwrap() - 5.0 / 5.94).abs() < 1e-15);
        let c = base.with_axis(SweepAxis::Tf, 10.0).unwrap();
        assert!((c.protocol.q_ratio().unwrap() - 6.0).abs() < 1e-12);
        assert!(base.with_axis(SweepAxis::Gamma, -1.0).is_err());
        let lz = parse_config("tf = 5").unwrap();
        assert!(lz.with_axis(SweepAxis::Q, 6.0).is_err());
        let c = lz.with_axis(SweepAxis::Tf, 0.1).unwrap();
        assert!((c.dt() - 1e-6).abs() < 1e-20);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn numeric_keys_round_trip(tf in 0.01f64..500.0, g in 0.0f64..20.0, l in 0.01f64..5.0) {
                let text = format!("tf = {tf:e}\ngamma = {g:e}\nlambda = {l:e}\n");
                let c = parse_config(&text).unwrap();
                prop_assert_eq!(c.protocol.tf(), tf);
                prop_assert_eq!(c.bath.gamma, g);
                prop_assert_eq!(c.bath.lambda, l);
            }
        }
    }
}
