//! Survival fidelity, analytic benchmarks and curve analysis.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operator::{validate_density, DensityDiagnostics, Mat2, OperatorMatrix};
use crate::protocol::adiabatic_frame;

/// Conditions noticed during a run that do not abort it.
#[derive(Debug, Clone, PartialEq)]
pub enum RunWarning {
    /// `dt · max(‖H_S‖, N|ν|)` above the RK4 comfort bound
    StabilityGuard { value: f64 },
    /// pseudomode population in the top Fock level exceeded the threshold
    CutoffLimited { top_population: f64 },
}

/// Sampled output of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTrace {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub diagnostics: Vec<DensityDiagnostics>,
    /// reduced qubit state at each sample
    pub states: Vec<Mat2>,
    pub warnings: Vec<RunWarning>,
}

impl FidelityTrace {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            fidelity: Vec::with_capacity(n),
            diagnostics: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, t: f64, fidelity: f64, rho: Mat2) {
        self.times.push(t);
        self.fidelity.push(fidelity);
        self.diagnostics.push(rho.diagnostics());
        self.states.push(rho);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("trace has at least one sample")
    }

    pub fn min_fidelity(&self) -> f64 {
        self.fidelity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_t |F_self(t) − F_other(t)|` on a shared grid.
    pub fn max_fidelity_delta(&self, other: &FidelityTrace) -> Result<f64> {
        check_same_grid(self, other)?;
        Ok(self
            .fidelity
            .iter()
            .zip(&other.fidelity)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Worst density diagnostics across the trace, as (trace error,
    /// hermiticity defect, min eigenvalue, max purity).
    pub fn worst_diagnostics(&self) -> (f64, f64, f64, f64) {
        self.diagnostics.iter().fold(
            (0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY),
            |(tr, herm, eig, pur), d| {
                (
                    tr.max((d.trace - 1.0).norm()),
                    herm.max(d.hermiticity_defect),
                    eig.min(d.min_eigenvalue),
                    pur.max(d.purity),
                )
            },
        )
    }

    pub fn is_cutoff_limited(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, RunWarning::CutoffLimited { .. }))
    }
}

pub(crate) fn check_same_grid(a: &FidelityTrace, b: &FidelityTrace) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} samples", a.len(), b.len())));
    }
    for (i, (ta, tb)) in a.times.iter().zip(&b.times).enumerate() {
        if (ta - tb).abs() > 1e-9 * ta.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("sample {i}: t = {ta} vs {tb}")));
        }
    }
    Ok(())
}

/// `Re ⟨ψ_g|ρ|ψ_g⟩` against the ground state of `H_LZ(Z, X)`; rejects
/// inputs that are not valid density matrices.
pub fn survival_fidelity(rho: &OperatorMatrix, z: f64, x: f64) -> Result<f64> {
    let m = Mat2::try_from(rho)?;
    if let Some(v) = validate_density(rho).violation() {
        return Err(Error::InvalidDensity(v));
    }
    let f = m.expectation(adiabatic_frame(z, x)?.psi_g);
    if f.im.abs() > 1e-10 {
        return Err(Error::InvalidDensity(format!(
            "fidelity has imaginary part {:e}",
            f.im
        )));
    }
    Ok(f.re)
}

/// Infinite-sweep Landau-Zener survival probability `1 − exp(−πX²/2v)`.
pub fn lz_probability(x: f64, v: f64) -> f64 {
    wubs_asymptotic(x, 0.0, v)
}

/// Zero-temperature infinite-sweep fidelity with the bath-enhanced gap
/// `W² = X² + γ`.
pub fn wubs_asymptotic(x: f64, gamma: f64, v: f64) -> f64 {
    1.0 - (-PI * (x * x + gamma) / (2.0 * v)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub y: f64,
    pub kind: ExtremumKind,
}

/// Interior local extrema of a sampled curve.
///
/// A maximum is only reported once the curve has dropped more than
/// `noise_floor` below it (and symmetrically for minima), so ripples smaller
/// than the floor are ignored. Extrema sitting on the first or last sample
/// are not interior and are dropped.
pub fn find_extrema(xs: &[f64], ys: &[f64], noise_floor: f64) -> Vec<Extremum> {
    let n = xs.len().min(ys.len());
    if n < 3 {
        return Vec::new();
    }
    let floor = noise_floor.max(0.0);
    let mut out = Vec::new();
    let (mut hi, mut hi_at) = (f64::NEG_INFINITY, 0);
    let (mut lo, mut lo_at) = (f64::INFINITY, 0);
    let mut seeking_max = true;
    for (i, &y) in ys.iter().enumerate().take(n) {
        if y > hi {
            hi = y;
            hi_at = i;
        }
        if y < lo {
            lo = y;
            lo_at = i;
        }
        if seeking_max {
            if y < hi - floor {
                out.push((hi_at, ExtremumKind::Max));
                lo = y;
                lo_at = i;
                seeking_max = false;
            }
        } else if y > lo + floor {
            out.push((lo_at, ExtremumKind::Min));
            hi = y;
            hi_at = i;
            seeking_max = true;
        }
    }
    out.into_iter()
        .filter(|&(i, _)| i > 0 && i + 1 < n)
        .map(|(i, kind)| Extremum {
            x: xs[i],
            y: ys[i],
            kind,
        })
        .collect()
}

/// Grid points where `a − b` changes sign, as the index of the left point
/// of each bracketing pair.
pub fn sign_changes(a: &[f64], b: &[f64]) -> Vec<usize> {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    d.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] * w[1] < 0.0 || (w[0] != 0.0 && w[1] == 0.0))
        .map(|(i, _)| i)
        .collect()
}
