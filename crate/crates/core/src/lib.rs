//! Numerically exact simulation of finite-time Landau-Zener sweeps of a qubit
//! coupled to a Lorentzian zero-temperature bosonic bath.
//!
//! The reduced dynamics is propagated with the hierarchical equations of
//! motion ([`heom`]). Control protocols ([`protocol`]) cover the bare sweep,
//! counter-diabatic driving, its transformed variant and continuous
//! dynamical decoupling. An independent pseudomode master equation
//! ([`pseudomode`]) cross-checks the hierarchy, and [`experiment`] drives
//! batch runs, sweeps and figure presets with CSV output.

pub mod bath;
pub mod config;
pub mod error;
pub mod experiment;
pub mod heom;
pub mod integrator;
pub mod observables;
pub mod operator;
pub mod presets;
pub mod protocol;
pub mod pseudomode;

pub use bath::{correlation, decompose, spectral_density, BathSpec, ExponentialDecomposition};
pub use config::{parse_config, parse_grid, RunConfig, SweepAxis};
pub use error::{Error, Result};
pub use heom::{
    auto_converge, build_hierarchy, evolve, rhs, Converged, ConvergenceReport, HierarchyIndexSet,
    HierarchyState, InitialState, SimulationConfig,
};
pub use observables::{
    find_extrema, lz_probability, survival_fidelity, wubs_asymptotic, Extremum, ExtremumKind,
    FidelityTrace, RunWarning,
};
pub use operator::{
    anticommutator_super, commutator_super, validate_density, DensityDiagnostics, Mat2,
    OperatorMatrix,
};
pub use protocol::{
    adiabatic_frame, bias, dd_average_check, hamiltonian, AdiabaticFrame, BiasPoint, BiasSchedule,
    ProtocolMode, ProtocolSpec, ScheduleKind,
};
pub use pseudomode::{
    evolve_pseudomode, mode_correlation, oracle_compare, pseudomode_hamiltonian, trace_distance_max,
    OracleComparison, PseudomodeConfig,
};
