//! Pseudomode oracle: the qubit plus one damped bosonic mode.
//!
//! A single harmonic mode of frequency `ω_c`, coupled as `√γ V ⊗ (a + a†)`
//! and leaking at rate `2λ` into a zero-temperature Markovian reservoir,
//! reproduces `C(t) = γ e^{−(λ+iω_c)t}` exactly. Propagating that Lindblad
//! equation on the truncated Fock space and tracing the mode out gives an
//! independent reference for the hierarchy.

use num_complex::Complex64 as C64;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::heom::{default_dt, default_sample_every, fidelity_at, InitialState, SimulationConfig};
use crate::integrator::Rk4;
use crate::observables::{check_same_grid, FidelityTrace, RunWarning};
use crate::operator::{Mat2, OperatorMatrix};
use crate::protocol::{frame_unchecked, ProtocolSpec};

pub const DEFAULT_N_FOCK: usize = 16;

/// Top-level population above which a run is flagged as cutoff limited.
pub const CUTOFF_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudomodeConfig {
    pub protocol: ProtocolSpec,
    pub bath: BathSpec,
    /// Fock levels kept for the mode
    pub n_fock: usize,
    pub dt: f64,
    pub sample_every: usize,
    pub initial_state: InitialState,
}

impl PseudomodeConfig {
    pub fn new(protocol: ProtocolSpec, bath: BathSpec) -> Self {
        let tf = protocol.tf();
        let dt = default_dt(tf);
        Self {
            protocol,
            bath,
            n_fock: DEFAULT_N_FOCK,
            dt,
            sample_every: default_sample_every(tf, dt),
            initial_state: InitialState::GroundAdiabatic,
        }
    }

    /// Same protocol, bath, time grid and initial state as a hierarchy run.
    pub fn matching(cfg: &SimulationConfig, n_fock: usize) -> Self {
        Self {
            protocol: cfg.protocol,
            bath: cfg.bath,
            n_fock,
            dt: cfg.dt,
            sample_every: cfg.sample_every,
            initial_state: cfg.initial_state.clone(),
        }
    }

    pub fn with_n_fock(mut self, n_fock: usize) -> Self {
        self.n_fock = n_fock;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.bath.validate()?;
        if self.n_fock < 2 {
            return Err(Error::param("n_fock", format!("needs at least 2 levels, got {}", self.n_fock)));
        }
        if !(self.dt > 0.0 && self.dt <= self.protocol.tf()) {
            return Err(Error::param("dt", format!("must lie in (0, tf], got {}", self.dt)));
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

    pub fn steps(&self) -> usize {
        (self.protocol.tf() / self.dt).round().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.protocol.tf() / self.steps() as f64
    }

    fn initial_rho(&self) -> Mat2 {
        match self.initial_state {
            InitialState::GroundAdiabatic => {
                let z0 = self.protocol.schedule.eval(0.0).z;
                Mat2::projector(frame_unchecked(z0, self.protocol.x).psi_g)
            }
            InitialState::Explicit(rho) => rho,
        }
    }
}

/// System-plus-mode Lindblad generator acting on a row-major density matrix
/// indexed by `q·n + k` (system level `q`, Fock level `k`).
struct ModeModel {
    /// system dimension
    s: usize,
    n: usize,
    v: Vec<C64>,
    g: f64,
    omega: f64,
    rate: f64,
    sqrt: Vec<f64>,
    x: Vec<C64>,
    w: Vec<C64>,
    adj: Vec<C64>,
}

impl ModeModel {
    fn new(s: usize, n: usize, v: Vec<C64>, bath: &BathSpec) -> Self {
        let d = s * n;
        Self {
            s,
            n,
            v,
            g: bath.gamma.sqrt(),
            omega: bath.omega_c,
            rate: 2.0 * bath.lambda,
            sqrt: (0..=n).map(|k| (k as f64).sqrt()).collect(),
            x: vec![C64::default(); d * d],
            w: vec![C64::default(); d * d],
            adj: vec![C64::default(); d * d],
        }
    }

    fn dim(&self) -> usize {
        self.s * self.n
    }

    /// `dst = H_eff src` with
    /// `H_eff = H_S ⊗ I + ω a†a + g V ⊗ (a + a†) − i(Γ/2) a†a`.
    fn left_multiply(&self, hs: &[C64], src: &[C64], dst: &mut [C64]) {
        let (s, n, d) = (self.s, self.n, self.dim());
        let zero = C64::default();
        for q in 0..s {
            for k in 0..n {
                let r = q * n + k;
                let dk = C64::new(self.omega * k as f64, -0.5 * self.rate * k as f64);
                for (c, xv) in dst[r * d..(r + 1) * d].iter_mut().enumerate() {
                    let mut acc = dk * src[r * d + c];
                    for p in 0..s {
                        let h = hs[q * s + p];
                        if h != zero {
                            acc += h * src[(p * n + k) * d + c];
                        }
                        let vg = self.v[q * s + p] * self.g;
                        if vg != zero {
                            if k + 1 < n {
                                acc += vg * self.sqrt[k + 1] * src[(p * n + k + 1) * d + c];
                            }
                            if k > 0 {
                                acc += vg * self.sqrt[k] * src[(p * n + k - 1) * d + c];
                            }
                        }
                    }
                    *xv = acc;
                }
            }
        }
    }

    /// `dρ = −i(H_eff ρ − ρ H_eff†) + Γ a ρ a†`. When `hermitian` is set the
    /// caller promises `ρ = ρ†`, so `ρ H_eff† = (H_eff ρ)†` saves a product.
    fn apply(&mut self, hs: &[C64], rho: &[C64], out: &mut [C64], hermitian: bool) {
        let (n, d) = (self.n, self.dim());
        let mut x = std::mem::take(&mut self.x);
        self.left_multiply(hs, rho, &mut x);
        let mut w = std::mem::take(&mut self.w);
        if !hermitian {
            for r in 0..d {
                for c in 0..d {
                    self.adj[r * d + c] = rho[c * d + r].conj();
                }
            }
            self.left_multiply(hs, &self.adj, &mut w);
        }
        let rhs_w: &[C64] = if hermitian { &x } else { &w };
        let minus_i = C64::new(0.0, -1.0);
        for r in 0..d {
            let (q, k) = (r / n, r % n);
            for c in 0..d {
                let (p, m) = (c / n, c % n);
                let mut v = minus_i * (x[r * d + c] - rhs_w[c * d + r].conj());
                if k + 1 < n && m + 1 < n {
                    let w = self.rate * self.sqrt[k + 1] * self.sqrt[m + 1];
                    v += rho[(q * n + k + 1) * d + p * n + m + 1] * w;
                }
                out[r * d + c] = v;
            }
        }
        self.x = x;
        self.w = w;
    }
}

fn mat2_entries(m: &Mat2) -> Vec<C64> {
    m.0.to_vec()
}

/// Dense `H_S ⊗ I + ω_c I ⊗ a†a + √γ V ⊗ (a + a†)` at time `t`.
pub fn pseudomode_hamiltonian(t: f64, cfg: &PseudomodeConfig) -> Result<OperatorMatrix> {
    cfg.validate()?;
    cfg.protocol.schedule.at(t)?;
    let n = cfg.n_fock;
    let hs = cfg.protocol.system_hamiltonian(t.clamp(0.0, cfg.protocol.tf()));
    let v = cfg.bath.coupling_operator();
    let g = cfg.bath.gamma.sqrt();
    Ok(OperatorMatrix::from_fn(2 * n, |r, c| {
        let (q, k) = (r / n, r % n);
        let (p, m) = (c / n, c % n);
        let mut h = C64::default();
        if k == m {
            h += hs.0[q * 2 + p];
            if q == p {
                h += cfg.bath.omega_c * k as f64;
            }
        }
        if m == k + 1 || k == m + 1 {
            h += v.0[q * 2 + p] * g * (k.max(m) as f64).sqrt();
        }
        h
    }))
}

fn reduce(rho: &[C64], n: usize) -> Mat2 {
    let d = 2 * n;
    let mut out = [C64::default(); 4];
    for q in 0..2 {
        for p in 0..2 {
            out[q * 2 + p] = (0..n).map(|k| rho[(q * n + k) * d + p * n + k]).sum();
        }
    }
    Mat2(out)
}

fn top_population(rho: &[C64], n: usize) -> f64 {
    let d = 2 * n;
    (0..2).map(|q| rho[(q * n + n - 1) * (d + 1)].re).sum()
}

/// Integrates the qubit-plus-mode master equation and returns the reduced
/// qubit trace. Runs whose top Fock level ever holds more than
/// [`CUTOFF_THRESHOLD`] carry a [`RunWarning::CutoffLimited`].
pub fn evolve_pseudomode(cfg: &PseudomodeConfig) -> Result<FidelityTrace> {
    cfg.validate()?;
    let n = cfg.n_fock;
    let d = 2 * n;
    let protocol = cfg.protocol;
    let mut model = ModeModel::new(2, n, mat2_entries(&cfg.bath.coupling_operator()), &cfg.bath);

    let rho_s = cfg.initial_rho();
    let mut rho = vec![C64::default(); d * d];
    for q in 0..2 {
        for p in 0..2 {
            rho[(q * n) * d + p * n] = rho_s.0[q * 2 + p];
        }
    }

    let steps = cfg.steps();
    let dt = cfg.effective_dt();
    let mut trace = FidelityTrace::with_capacity(steps / cfg.sample_every + 2);
    trace.push(0.0, fidelity_at(&protocol, 0.0, &rho_s), rho_s);
    let mut top = 0.0f64;

    let mut rk = Rk4::new(d * d);
    for k in 0..steps {
        let t = k as f64 * dt;
        rk.step(t, dt, &mut rho, |t, y, dy| {
            let hs = protocol.system_hamiltonian(t);
            model.apply(&hs.0, y, dy, true)
        });
        let done = k + 1;
        if done % cfg.sample_every == 0 || done == steps {
            let t = if done == steps { protocol.tf() } else { done as f64 * dt };
            if let Some(i) = rho.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite {
                    index: (i / d, i % d),
                    t,
                });
            }
            top = top.max(top_population(&rho, n));
            let r = reduce(&rho, n);
            trace.push(t, fidelity_at(&protocol, t, &r), r);
        }
    }
    if top > CUTOFF_THRESHOLD {
        trace.warnings.push(RunWarning::CutoffLimited { top_population: top });
    }
    Ok(trace)
}

/// Bath correlation seen through the damped mode alone, via the quantum
/// regression theorem: `⟨B(t) B(0)⟩` with `B = √γ (a + a†)` and the mode in
/// its vacuum.
pub fn mode_correlation(bath: &BathSpec, n_fock: usize, times: &[f64], dt: f64) -> Result<Vec<C64>> {
    bath.validate()?;
    if n_fock < 2 || !(dt > 0.0) {
        return Err(Error::param("n_fock/dt", "need n_fock >= 2 and dt > 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::param("times", "must be non-negative and ascending"));
    }
    let n = n_fock;
    let g = bath.gamma.sqrt();
    let mut model = ModeModel::new(1, n, vec![C64::default()], bath);
    // B ρ_vac = g |1⟩⟨0|
    let mut x = vec![C64::default(); n * n];
    x[n] = C64::new(g, 0.0);
    let corr = |x: &[C64]| -> C64 {
        // Tr[B X] = g Σ_k (√(k+1) X[k+1,k] + √k X[k−1,k])
        let mut acc = C64::default();
        for k in 0..n {
            if k + 1 < n {
                acc += x[(k + 1) * n + k] * ((k + 1) as f64).sqrt();
            }
            if k > 0 {
                acc += x[(k - 1) * n + k] * (k as f64).sqrt();
            }
        }
        acc * g
    };
    let hs = [C64::default()];
    let mut rk = Rk4::new(n * n);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        let steps = (span / dt).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                rk.step(t, h, &mut x, |_, y, dy| model.apply(&hs, y, dy, false));
                t += h;
            }
        }
        t = target;
        out.push(corr(&x));
    }
    Ok(out)
}

/// `max_t ½‖ρ_a(t) − ρ_b(t)‖₁` on a shared grid.
pub fn trace_distance_max(a: &FidelityTrace, b: &FidelityTrace) -> Result<f64> {
    check_same_grid(a, b)?;
    Ok(a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| (*x - *y).half_trace_norm())
        .fold(0.0, f64::max))
}

/// Hierarchy and pseudomode traces for one configuration, side by side.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub heom: FidelityTrace,
    pub pseudomode: FidelityTrace,
    pub n_fock_used: usize,
    pub max_fidelity_delta: f64,
    pub max_trace_distance: f64,
}

impl OracleComparison {
    pub fn agrees(&self, tol: f64) -> bool {
        self.max_fidelity_delta < tol && self.max_trace_distance < tol
    }

    /// The pseudomode reference could not be made cutoff-free.
    pub fn is_inconclusive(&self) -> bool {
        self.pseudomode.is_cutoff_limited()
    }
}

/// Largest Fock space [`oracle_compare`] will try.
pub const MAX_N_FOCK: usize = 64;

/// Runs the hierarchy and the pseudomode reference on the same grid. The
/// Fock cutoff starts at `n_fock` and doubles while the reference is cutoff
/// limited, up to [`MAX_N_FOCK`].
pub fn oracle_compare(cfg: &SimulationConfig, n_fock: usize) -> Result<OracleComparison> {
    let heom = crate::heom::evolve(cfg)?;
    let mut n = n_fock;
    let pseudomode = loop {
        let trace = evolve_pseudomode(&PseudomodeConfig::matching(cfg, n))?;
        if !trace.is_cutoff_limited() || 2 * n > MAX_N_FOCK {
            break trace;
        }
        n *= 2;
    };
    Ok(OracleComparison {
        max_fidelity_delta: heom.max_fidelity_delta(&pseudomode)?,
        max_trace_distance: trace_distance_max(&heom, &pseudomode)?,
        heom,
        pseudomode,
        n_fock_used: n,
    })
}
