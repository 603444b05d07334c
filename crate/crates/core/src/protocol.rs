//! Time-dependent system Hamiltonians for the sweep protocols.
//!
//! The bare sweep is `H_LZ = Z(t) σz/2 + X σx/2`. Counter-diabatic (CD)
//! control adds `(θ̇/2) σy` with `θ = arccot(Z/X)`; the transformed variant
//! trades the `σy` term for a modified bias and transverse field; continuous
//! decoupling adds a constant `(π/t_D) σy`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{Mat2, OperatorMatrix};

/// Shape of the bias ramp `Z(t)` on `[0, tf]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    /// `z0 + δ(6s⁵ − 15s⁴ + 10s³)`, `s = t/tf`, `δ = zf − z0`
    Quintic,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Quintic => "quintic",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ScheduleKind::Linear),
            "quintic" => Ok(ScheduleKind::Quintic),
            other => Err(format!("unknown schedule `{other}` (expected linear | quintic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasSchedule {
    pub kind: ScheduleKind,
    pub z0: f64,
    pub zf: f64,
    pub tf: f64,
}

/// `Z`, `Ż`, `Z̈` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub z: f64,
    pub zdot: f64,
    pub zddot: f64,
}

impl BiasSchedule {
    pub fn linear(z0: f64, zf: f64, tf: f64) -> Self {
        Self {
            kind: ScheduleKind::Linear,
            z0,
            zf,
            tf,
        }
    }

    pub fn quintic(z0: f64, zf: f64, tf: f64) -> Self {
        Self {
            kind: ScheduleKind::Quintic,
            z0,
            zf,
            tf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tf > 0.0 && self.tf.is_finite()) {
            return Err(Error::param("tf", format!("must be positive, got {}", self.tf)));
        }
        if !self.z0.is_finite() || !self.zf.is_finite() {
            return Err(Error::param("z0/zf", "must be finite"));
        }
        Ok(())
    }

    /// Mean sweep rate `(zf − z0)/tf`.
    pub fn sweep_rate(&self) -> f64 {
        (self.zf - self.z0) / self.tf
    }

    /// Value and first two analytic derivatives at `t ∈ [0, tf]`.
    pub fn at(&self, t: f64) -> Result<BiasPoint> {
        // integrator substages may land a few ulps past tf
        let slack = 1e-9 * self.tf.max(1.0);
        if !(t >= -slack && t <= self.tf + slack) {
            return Err(Error::TimeOutOfRange { t, tf: self.tf });
        }
        Ok(self.eval(t.clamp(0.0, self.tf)))
    }

    pub(crate) fn eval(&self, t: f64) -> BiasPoint {
        let delta = self.zf - self.z0;
        match self.kind {
            ScheduleKind::Linear => BiasPoint {
                z: self.z0 + delta * t / self.tf,
                zdot: delta / self.tf,
                zddot: 0.0,
            },
            ScheduleKind::Quintic => {
                let s = t / self.tf;
                let (s2, s3) = (s * s, s * s * s);
                BiasPoint {
                    z: self.z0 + delta * s3 * (10.0 - 15.0 * s + 6.0 * s2),
                    zdot: delta / self.tf * 30.0 * s2 * (1.0 - 2.0 * s + s2),
                    zddot: delta / (self.tf * self.tf) * 60.0 * s * (1.0 - 3.0 * s + 2.0 * s2),
                }
            }
        }
    }
}

/// Free-function form of [`BiasSchedule::at`].
pub fn bias(t: f64, schedule: &BiasSchedule) -> Result<BiasPoint> {
    schedule.at(t)
}

/// Which pieces of the control Hamiltonian are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolMode {
    /// bare sweep
    Lz,
    /// sweep plus CD field
    LzCd,
    /// CD field alone
    CdOnly,
    /// transformed CD (quintic schedule only)
    Tcd,
    /// CD field plus continuous decoupling field
    CdOnlyDd,
}

impl ProtocolMode {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolMode::Lz => "lz",
            ProtocolMode::LzCd => "lz_cd",
            ProtocolMode::CdOnly => "cd_only",
            ProtocolMode::Tcd => "tcd",
            ProtocolMode::CdOnlyDd => "cd_only_dd",
        }
    }
}

impl fmt::Display for ProtocolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace(['-', '+'], "_");
        match norm.as_str() {
            "lz" => Ok(ProtocolMode::Lz),
            "lz_cd" => Ok(ProtocolMode::LzCd),
            "cd" | "cd_only" => Ok(ProtocolMode::CdOnly),
            "tcd" => Ok(ProtocolMode::Tcd),
            "cd_dd" | "cd_only_dd" => Ok(ProtocolMode::CdOnlyDd),
            _ => Err(format!(
                "unknown protocol `{s}` (expected lz | lz_cd | cd_only | tcd | cd_only_dd)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub schedule: BiasSchedule,
    /// diabatic coupling `X`
    pub x: f64,
    pub mode: ProtocolMode,
    /// decoupling period `t_D`, required iff `mode == CdOnlyDd`
    pub t_d: Option<f64>,
}

impl ProtocolSpec {
    pub fn new(schedule: BiasSchedule, x: f64, mode: ProtocolMode) -> Self {
        Self {
            schedule,
            x,
            mode,
            t_d: None,
        }
    }

    pub fn with_decoupling_period(mut self, t_d: f64) -> Self {
        self.t_d = Some(t_d);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.x > 0.0 && self.x.is_finite()) {
            return Err(Error::param("X", format!("must be positive, got {}", self.x)));
        }
        if self.mode == ProtocolMode::Tcd && self.schedule.kind != ScheduleKind::Quintic {
            return Err(Error::param(
                "schedule",
                "transformed CD requires the quintic schedule",
            ));
        }
        match (self.mode, self.t_d) {
            (ProtocolMode::CdOnlyDd, None) => {
                Err(Error::param("td", "decoupling mode needs a period t_D"))
            }
            (ProtocolMode::CdOnlyDd, Some(td)) if !(td > 0.0 && td.is_finite()) => {
                Err(Error::param("td", format!("must be positive, got {td}")))
            }
            _ => Ok(()),
        }
    }

    pub fn tf(&self) -> f64 {
        self.schedule.tf
    }

    /// Decoupling amplitude `Y_D = π/t_D`, zero when decoupling is off.
    pub fn decoupling_amplitude(&self) -> f64 {
        match (self.mode, self.t_d) {
            (ProtocolMode::CdOnlyDd, Some(td)) => PI / td,
            _ => 0.0,
        }
    }

    /// `Q = tf/t_D`, if decoupling is on.
    pub fn q_ratio(&self) -> Option<f64> {
        match self.mode {
            ProtocolMode::CdOnlyDd => self.t_d.map(|td| self.tf() / td),
            _ => None,
        }
    }

    /// System Hamiltonian on the fast path. Assumes `validate` passed.
    pub(crate) fn system_hamiltonian(&self, t: f64) -> Mat2 {
        let b = self.schedule.eval(t.clamp(0.0, self.schedule.tf));
        let x = self.x;
        let rates = AngleRates::new(b, x);
        match self.mode {
            ProtocolMode::Lz => Mat2::pauli(0.5 * x, 0.0, 0.5 * b.z),
            ProtocolMode::LzCd => Mat2::pauli(0.5 * x, 0.5 * rates.theta_dot, 0.5 * b.z),
            ProtocolMode::CdOnly => Mat2::pauli(0.0, 0.5 * rates.theta_dot, 0.0),
            ProtocolMode::CdOnlyDd => Mat2::pauli(
                0.0,
                0.5 * rates.theta_dot + self.decoupling_amplitude(),
                0.0,
            ),
            ProtocolMode::Tcd => {
                let td = rates.theta_dot;
                let p = (x * x + td * td).sqrt();
                let eta_dot = x * rates.theta_ddot / (x * x + td * td);
                Mat2::pauli(0.5 * p, 0.0, 0.5 * (b.z - eta_dot))
            }
        }
    }
}

/// `θ̇` and `θ̈` for `θ = arccot(Z/X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRates {
    pub theta_dot: f64,
    pub theta_ddot: f64,
}

impl AngleRates {
    pub fn new(b: BiasPoint, x: f64) -> Self {
        let r2 = x * x + b.z * b.z;
        Self {
            theta_dot: -b.zdot * x / r2,
            theta_ddot: -x * (b.zddot * r2 - 2.0 * b.z * b.zdot * b.zdot) / (r2 * r2),
        }
    }
}

/// Instantaneous eigenbasis of `H_LZ(Z, X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticFrame {
    /// `arccot(Z/X)` on the branch `(0, π)`
    pub theta: f64,
    /// `−sin(θ/2)|↑⟩ + cos(θ/2)|↓⟩`, components `[↑, ↓]`
    pub psi_g: [C64; 2],
    /// `cos(θ/2)|↑⟩ + sin(θ/2)|↓⟩`
    pub psi_e: [C64; 2],
    pub e_minus: f64,
    pub e_plus: f64,
}

pub fn adiabatic_frame(z: f64, x: f64) -> Result<AdiabaticFrame> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::param("X", format!("must be positive, got {x}")));
    }
    Ok(frame_unchecked(z, x))
}

pub(crate) fn frame_unchecked(z: f64, x: f64) -> AdiabaticFrame {
    let theta = x.atan2(z);
    let (s, c) = (0.5 * theta).sin_cos();
    let e = 0.5 * z.hypot(x);
    AdiabaticFrame {
        theta,
        psi_g: [C64::new(-s, 0.0), C64::new(c, 0.0)],
        psi_e: [C64::new(c, 0.0), C64::new(s, 0.0)],
        e_minus: -e,
        e_plus: e,
    }
}

/// `H_LZ(Z, X) = Z σz/2 + X σx/2`.
pub fn lz_hamiltonian(z: f64, x: f64) -> Mat2 {
    Mat2::pauli(0.5 * x, 0.0, 0.5 * z)
}

/// System Hamiltonian of `spec` at time `t`.
pub fn hamiltonian(t: f64, spec: &ProtocolSpec) -> Result<OperatorMatrix> {
    spec.validate()?;
    spec.schedule.at(t)?;
    Ok(spec.system_hamiltonian(t).into())
}

/// Trapezoidal estimate of `∫₀^{t_D} U†(τ) V U(τ) dτ` with
/// `U(τ) = exp(−i (π/t_D) σy τ)`, using `steps` subintervals.
///
/// A vanishing result means the decoupling field averages `V` away over one
/// period.
pub fn dd_average_check(t_d: f64, v: &OperatorMatrix, steps: usize) -> Result<OperatorMatrix> {
    if steps < 2 {
        return Err(Error::param("steps", format!("need at least 2, got {steps}")));
    }
    if !(t_d > 0.0 && t_d.is_finite()) {
        return Err(Error::param("td", format!("must be positive, got {t_d}")));
    }
    let v = Mat2::try_from(v)?;
    if v.hermiticity_defect() > 1e-12 {
        return Err(Error::param("V", "must be Hermitian"));
    }
    let h = t_d / steps as f64;
    let mut acc = Mat2::ZERO;
    for k in 0..=steps {
        let phi = PI * (k as f64 * h) / t_d;
        let (s, c) = phi.sin_cos();
        // exp(−iφσy) = cos φ I − i sin φ σy
        let u = Mat2::IDENTITY * c + Mat2::SIGMA_Y * C64::new(0.0, -s);
        let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
        acc += (u.adjoint() * v * u) * (w * h);
    }
    Ok(acc.into())
}
