//! Open-system simulation of emitters coupled to a lossy cavity mode.
//!
//! The model is the Tavis-Cummings Hamiltonian with incoherent pumping,
//! pure dephasing, free-space decay and cavity loss. All rates are expressed
//! in units of the coupling `g`. On top of the master equation the crate
//! provides steady states, trajectories, photon correlations `g²(τ)`,
//! Dicke-basis observables, parameter sweeps and a fitting toolkit for
//! measured coincidence histograms.
//!
//! Basis convention: index = `bits · (n_max + 1) + n`, where bit `N − i` of
//! `bits` is emitter `i` (1 = excited) and `n` is the photon number.

pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod liouvillian;
pub mod observables;
pub mod ode;
pub mod operator;
pub mod space;
pub mod sparse;
pub mod state;
pub mod steady;
pub mod sweep;

pub use dynamics::{
    correlation_curve, evolve, evolve_with, g2_cavity_zero, g2_tau, g2_zero, g2_zero_kind, g2_zero_of,
    CorrelationCurve, CorrelationKind, EvolveOptions, Trajectory,
};
pub use error::{Error, Result};
pub use liouvillian::{build_liouvillian, LiouvillianMap, SystemParams};
pub use observables::{cooperativity, dicke_populations, population_contrast, DickePopulations};
pub use operator::Operator;
pub use space::SpaceDescriptor;
pub use state::DensityMatrix;
pub use steady::{steady_state, steady_state_by_evolution};
