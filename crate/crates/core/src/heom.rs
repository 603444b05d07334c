//! Hierarchy of auxiliary density operators (ADOs) for a qubit coupled to a
//! Lorentzian zero-temperature bath.
//!
//! Each ADO `ϱ_n` carries a two-component index `n = (n₁, n₂)`, one count
//! per exponential of the bath correlation function. With
//! `ν = (λ − iω_c, λ + iω_c)` the hierarchy reads
//!
//! ```text
//! ∂t ϱ_n = −(i H_S^× + n·ν) ϱ_n − i Σ_k V^× ϱ_{n+e_k}
//!          − i (γ/2) Σ_k n_k [V^× + (−1)^k V^∘] ϱ_{n−e_k}
//! ```
//!
//! with `ϱ_(0,0) = ρ_S` and every other ADO starting at zero. The hierarchy
//! is truncated at total order `n₁ + n₂ ≤ N`; the top layer simply drops its
//! couplings to deeper ADOs.

use num_complex::Complex64 as C64;

use crate::bath::{decompose, BathSpec};
use crate::error::{Error, Result};
use crate::integrator::Rk4;
use crate::observables::{FidelityTrace, RunWarning};
use crate::operator::Mat2;
use crate::protocol::{frame_unchecked, ProtocolSpec};

/// Triangular index set `{(n₁, n₂) : n₁ + n₂ ≤ N}` in graded lexicographic
/// order, with precomputed neighbour links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyIndexSet {
    depth: usize,
    indices: Vec<(usize, usize)>,
    up: Vec<[Option<usize>; 2]>,
    down: Vec<[Option<usize>; 2]>,
}

impl HierarchyIndexSet {
    pub fn new(depth: usize) -> Self {
        let count = (depth + 1) * (depth + 2) / 2;
        let mut indices = Vec::with_capacity(count);
        for level in 0..=depth {
            for n1 in (0..=level).rev() {
                indices.push((n1, level - n1));
            }
        }
        let pos = |n1: usize, n2: usize| -> Option<usize> {
            (n1 + n2 <= depth).then(|| Self::offset(n1, n2))
        };
        let up = indices
            .iter()
            .map(|&(a, b)| [pos(a + 1, b), pos(a, b + 1)])
            .collect();
        let down = indices
            .iter()
            .map(|&(a, b)| {
                [
                    a.checked_sub(1).and_then(|a| pos(a, b)),
                    b.checked_sub(1).and_then(|b| pos(a, b)),
                ]
            })
            .collect();
        Self {
            depth,
            indices,
            up,
            down,
        }
    }

    fn offset(n1: usize, n2: usize) -> usize {
        let level = n1 + n2;
        level * (level + 1) / 2 + (level - n1)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub fn position(&self, n1: usize, n2: usize) -> Option<usize> {
        (n1 + n2 <= self.depth).then(|| Self::offset(n1, n2))
    }

    /// Positions of `n + e₁` and `n + e₂`; `None` past the truncation.
    pub fn up(&self, i: usize) -> [Option<usize>; 2] {
        self.up[i]
    }

    /// Positions of `n − e₁` and `n − e₂`; `None` below zero.
    pub fn down(&self, i: usize) -> [Option<usize>; 2] {
        self.down[i]
    }
}

pub fn build_hierarchy(depth: usize) -> HierarchyIndexSet {
    HierarchyIndexSet::new(depth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// ground state of `H_LZ(Z(0), X)`
    GroundAdiabatic,
    Explicit(Mat2),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub protocol: ProtocolSpec,
    pub bath: BathSpec,
    pub depth: usize,
    pub dt: f64,
    pub sample_every: usize,
    pub initial_state: InitialState,
}

/// Step size used when none is given: 1e-3 for `tf ≥ 1`, otherwise
/// `tf · 1e-5` so the short, strongly driven sweeps get 1e5 steps.
pub fn default_dt(tf: f64) -> f64 {
    if tf >= 1.0 {
        1e-3
    } else {
        tf * 1e-5
    }
}

/// Sampling stride giving at most ~1000 samples.
pub fn default_sample_every(tf: f64, dt: f64) -> usize {
    let steps = (tf / dt).round().max(1.0) as usize;
    steps.div_ceil(1000).max(1)
}

pub const DEFAULT_DEPTH: usize = 20;

impl SimulationConfig {
    pub fn new(protocol: ProtocolSpec, bath: BathSpec) -> Self {
        let tf = protocol.tf();
        let dt = default_dt(tf);
        Self {
            protocol,
            bath,
            depth: DEFAULT_DEPTH,
            dt,
            sample_every: default_sample_every(tf, dt),
            initial_state: InitialState::GroundAdiabatic,
        }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    /// Sets `dt` and resets the sampling stride to its default.
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self.sample_every = default_sample_every(self.protocol.tf(), dt);
        self
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.bath.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.dt > self.protocol.tf() {
            return Err(Error::param("dt", "exceeds the protocol duration"));
        }
        if self.sample_every == 0 {
            return Err(Error::param("sample_every", "must be positive"));
        }
        if let InitialState::Explicit(rho) = self.initial_state {
            if let Some(v) = rho.diagnostics().violation() {
                return Err(Error::InvalidDensity(v));
            }
        }
        Ok(())
    }

    /// Number of integrator steps; `dt` is adjusted to land exactly on `tf`.
    pub fn steps(&self) -> usize {
        (self.protocol.tf() / self.dt).round().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.protocol.tf() / self.steps() as f64
    }

    pub(crate) fn initial_rho(&self) -> Mat2 {
        match self.initial_state {
            InitialState::GroundAdiabatic => {
                let z0 = self.protocol.schedule.eval(0.0).z;
                Mat2::projector(frame_unchecked(z0, self.protocol.x).psi_g)
            }
            InitialState::Explicit(rho) => rho,
        }
    }

    /// `dt · max(‖H_S‖_peak, N|ν|)`; values above 0.1 trigger a warning.
    pub fn stability_measure(&self) -> f64 {
        let tf = self.protocol.tf();
        let samples = 2000;
        let h_peak = (0..=samples)
            .map(|k| {
                let h = self.protocol.system_hamiltonian(tf * k as f64 / samples as f64);
                let [lo, hi] = h.hermitian_eigenvalues();
                lo.abs().max(hi.abs())
            })
            .fold(0.0, f64::max);
        let nu = self.bath.lambda.hypot(self.bath.omega_c);
        self.effective_dt() * h_peak.max(self.depth as f64 * nu)
    }
}

pub const STABILITY_LIMIT: f64 = 0.1;

/// All ADOs at one instant; slot 0 is the physical density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    pub index_set: HierarchyIndexSet,
    pub ados: Vec<Mat2>,
    pub t: f64,
}

impl HierarchyState {
    pub fn initial(cfg: &SimulationConfig) -> Self {
        let index_set = HierarchyIndexSet::new(cfg.depth);
        let mut ados = vec![Mat2::ZERO; index_set.len()];
        ados[0] = cfg.initial_rho();
        Self {
            index_set,
            ados,
            t: 0.0,
        }
    }

    pub fn rho(&self) -> Mat2 {
        self.ados[0]
    }
}

/// Precomputed pieces of the hierarchy generator.
struct Generator {
    index_set: HierarchyIndexSet,
    damping: Vec<C64>,
    weights: Vec<(f64, f64)>,
    v: Mat2,
    gamma: f64,
}

const MINUS_I: C64 = C64::new(0.0, -1.0);

impl Generator {
    fn new(cfg: &SimulationConfig) -> Self {
        let index_set = HierarchyIndexSet::new(cfg.depth);
        let nu = decompose(&cfg.bath).nu;
        let damping = index_set
            .indices()
            .iter()
            .map(|&(a, b)| nu[0] * a as f64 + nu[1] * b as f64)
            .collect();
        let weights = index_set
            .indices()
            .iter()
            .map(|&(a, b)| (a as f64 * cfg.bath.gamma, b as f64 * cfg.bath.gamma))
            .collect();
        Self {
            index_set,
            damping,
            weights,
            v: cfg.bath.coupling_operator(),
            gamma: cfg.bath.gamma,
        }
    }

    /// Writes `∂t ϱ` for every ADO given the system Hamiltonian `h`.
    fn apply(&self, h: Mat2, ados: &[Mat2], out: &mut [Mat2]) {
        let v = self.v;
        let coupled = self.gamma != 0.0;
        for (j, o) in out.iter_mut().enumerate() {
            let rho = ados[j];
            let mut d = h.comm(&rho) * MINUS_I - rho * self.damping[j];
            if coupled {
                let [u1, u2] = self.index_set.up[j];
                let feed = match (u1, u2) {
                    (Some(a), Some(b)) => Some(ados[a] + ados[b]),
                    (Some(a), None) => Some(ados[a]),
                    (None, Some(b)) => Some(ados[b]),
                    (None, None) => None,
                };
                if let Some(f) = feed {
                    d += v.comm(&f) * MINUS_I;
                }
                // k = 1: V^× − V^∘ = −2(·)V ; k = 2: V^× + V^∘ = 2V(·)
                let [d1, d2] = self.index_set.down[j];
                let (w1, w2) = self.weights[j];
                if let Some(a) = d1 {
                    d += (ados[a] * v) * C64::new(0.0, w1);
                }
                if let Some(b) = d2 {
                    d += (v * ados[b]) * C64::new(0.0, -w2);
                }
            }
            *o = d;
        }
    }
}

/// Time derivative of every ADO at time `t`.
pub fn rhs(t: f64, state: &HierarchyState, cfg: &SimulationConfig) -> Result<Vec<Mat2>> {
    cfg.validate()?;
    if state.index_set.depth() != cfg.depth || state.ados.len() != state.index_set.len() {
        return Err(Error::param(
            "state",
            format!(
                "hierarchy of depth {} does not match config depth {}",
                state.index_set.depth(),
                cfg.depth
            ),
        ));
    }
    check_finite(&state.index_set, &state.ados, t)?;
    cfg.protocol.schedule.at(t)?;
    let gen = Generator::new(cfg);
    let mut out = vec![Mat2::ZERO; state.ados.len()];
    gen.apply(cfg.protocol.system_hamiltonian(t), &state.ados, &mut out);
    Ok(out)
}

fn check_finite(index_set: &HierarchyIndexSet, ados: &[Mat2], t: f64) -> Result<()> {
    match ados.iter().position(|m| !m.is_finite()) {
        Some(i) => Err(Error::NonFinite {
            index: index_set.indices()[i],
            t,
        }),
        None => Ok(()),
    }
}

/// `(i, j)` slot pairs related by `ϱ_(n₂,n₁) = ϱ_(n₁,n₂)†`, with `n₁ > n₂`
/// at `i`; self-paired slots `(n, n)`, `n ≥ 1`, appear as `(i, i)`.
fn conjugate_pairs(index_set: &HierarchyIndexSet) -> Vec<(usize, usize)> {
    index_set
        .indices()
        .iter()
        .enumerate()
        .filter(|&(_, &(a, b))| a >= b && a > 0)
        .map(|(i, &(a, b))| (i, index_set.position(b, a).expect("set is symmetric")))
        .collect()
}

/// Re-imposes the conjugate pairing of the ADOs, which the exact dynamics
/// preserves. At strong coupling the truncated hierarchy has transiently
/// growing modes, and without this roundoff in the antisymmetric part is
/// amplified into visible Hermiticity loss. The physical slot is left
/// alone so a non-Hermitian generator still shows up in diagnostics.
fn restore_pairing(pairs: &[(usize, usize)], ados: &mut [Mat2]) {
    for &(i, j) in pairs {
        let m = (ados[i] + ados[j].adjoint()) * 0.5;
        ados[i] = m;
        ados[j] = m.adjoint();
    }
}

/// Survival fidelity of `rho` against the instantaneous adiabatic ground
/// state of the bare sweep at time `t`. Unchecked: diagnostics are recorded
/// alongside instead.
pub(crate) fn fidelity_at(protocol: &ProtocolSpec, t: f64, rho: &Mat2) -> f64 {
    let z = protocol.schedule.eval(t.clamp(0.0, protocol.tf())).z;
    rho.expectation(frame_unchecked(z, protocol.x).psi_g).re
}

/// Integrates the hierarchy from `t = 0` to `tf` with fixed-step RK4.
pub fn evolve(cfg: &SimulationConfig) -> Result<FidelityTrace> {
    evolve_with_state(cfg).map(|(trace, _)| trace)
}

/// Like [`evolve`], also returning the final hierarchy.
pub fn evolve_with_state(cfg: &SimulationConfig) -> Result<(FidelityTrace, HierarchyState)> {
    cfg.validate()?;
    let gen = Generator::new(cfg);
    let pairs = conjugate_pairs(&gen.index_set);
    let mut state = HierarchyState::initial(cfg);
    let steps = cfg.steps();
    let dt = cfg.effective_dt();
    let protocol = cfg.protocol;

    let mut trace = FidelityTrace::with_capacity(steps / cfg.sample_every + 2);
    let guard = cfg.stability_measure();
    if guard > STABILITY_LIMIT {
        trace.warnings.push(RunWarning::StabilityGuard { value: guard });
    }
    let rho0 = state.rho();
    trace.push(0.0, fidelity_at(&protocol, 0.0, &rho0), rho0);

    let mut rk = Rk4::new(state.ados.len());
    for k in 0..steps {
        let t = k as f64 * dt;
        rk.step(t, dt, &mut state.ados, |t, y, dy| {
            gen.apply(protocol.system_hamiltonian(t), y, dy)
        });
        restore_pairing(&pairs, &mut state.ados);
        let done = k + 1;
        if done % cfg.sample_every == 0 || done == steps {
            let t = if done == steps { protocol.tf() } else { done as f64 * dt };
            check_finite(&state.index_set, &state.ados, t)?;
            let rho = state.rho();
            trace.push(t, fidelity_at(&protocol, t, &rho), rho);
        }
    }
    state.t = protocol.tf();
    Ok((trace, state))
}

/// Outcome of [`auto_converge`].
#[derive(Debug, Clone)]
pub struct Converged {
    pub trace: FidelityTrace,
    pub depth_used: usize,
    pub report: ConvergenceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `(N, max_t |F_N − F_{N+2}|)` for every depth pair tried
    pub depth_deltas: Vec<(usize, f64)>,
    pub dt: f64,
    /// `max_t |F(dt) − F(dt/2)|` at the accepted depth
    pub dt_delta: f64,
    pub tol: f64,
}

impl ConvergenceReport {
    pub fn summary(&self) -> String {
        let deltas: Vec<String> = self
            .depth_deltas
            .iter()
            .map(|(n, d)| format!("N={n}->{}: {d:.3e}", n + 2))
            .collect();
        format!(
            "{}; dt={:e} vs dt/2: {:.3e} (tol {:e})",
            deltas.join(", "),
            self.dt,
            self.dt_delta,
            self.tol
        )
    }
}

/// Raises the hierarchy depth from `cfg.depth` in steps of two until
/// successive fidelity traces agree to `fidelity_tol` everywhere, then
/// halves `dt` once at the accepted depth and requires the same agreement.
///
/// Too shallow a hierarchy at strong coupling can blow up outright; such a
/// depth counts as unconverged (infinite delta) and the search moves on.
pub fn auto_converge(
    cfg: &SimulationConfig,
    fidelity_tol: f64,
    max_depth: usize,
) -> Result<Converged> {
    if !(fidelity_tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {fidelity_tol}")));
    }
    if cfg.depth + 2 > max_depth {
        return Err(Error::param(
            "max_depth",
            format!("needs room above the start depth {}", cfg.depth),
        ));
    }
    let mut depth = cfg.depth;
    let mut current = evolve_or_diverged(cfg)?;
    let mut deltas = Vec::new();
    loop {
        if depth + 2 > max_depth {
            let last = deltas.last().map(|&(_, d)| d).unwrap_or(f64::NAN);
            return Err(Error::NotConverged {
                what: format!("hierarchy depth up to {max_depth}"),
                delta: last,
                tol: fidelity_tol,
            });
        }
        let deeper = evolve_or_diverged(&cfg.clone().with_depth(depth + 2))?;
        let delta = match (&current, &deeper) {
            (Some(a), Some(b)) => a.max_fidelity_delta(b)?,
            _ => f64::INFINITY,
        };
        deltas.push((depth, delta));
        if delta < fidelity_tol {
            break;
        }
        depth += 2;
        current = deeper;
    }

    // delta < tol implies both traces exist
    let current = current.expect("converged trace");
    let mut refined = cfg.clone().with_depth(depth);
    refined.dt = cfg.effective_dt() / 2.0;
    refined.sample_every = cfg.sample_every * 2;
    let fine = evolve(&refined)?;
    let dt_delta = current.max_fidelity_delta(&fine)?;
    if dt_delta >= fidelity_tol {
        return Err(Error::NotConverged {
            what: format!("time step {:e} at depth {depth}", cfg.effective_dt()),
            delta: dt_delta,
            tol: fidelity_tol,
        });
    }
    Ok(Converged {
        trace: current,
        depth_used: depth,
        report: ConvergenceReport {
            depth_deltas: deltas,
            dt: cfg.effective_dt(),
            dt_delta,
            tol: fidelity_tol,
        },
    })
}

fn evolve_or_diverged(cfg: &SimulationConfig) -> Result<Option<FidelityTrace>> {
    match evolve(cfg) {
        Ok(t) => Ok(Some(t)),
        Err(Error::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
