//! Time evolution and two-time photon correlations.
//!
//! `g²(τ)` follows the quantum regression recipe on the unnormalized
//! conditional state: `χ(0) = X ρ_ss X†` is propagated with the same
//! generator, and `g²(τ) = tr(X†X χ(τ)) / ⟨X†X⟩²_ss`. Because `L` is linear no
//! renormalization of `χ` is needed, and the stationary value is used for
//! both denominator factors.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::liouvillian::{unvectorize, vectorize, LiouvillianMap, SystemParams};
use crate::ode::{Dopri5, DEFAULT_ATOL, DEFAULT_RTOL};
use crate::operator::{cavity_annihilation, collective_lowering, emitter_lowering, Operator};
use crate::space::SpaceDescriptor;
use crate::state::{DensityMatrix, CUTOFF_TOL};
use crate::steady::steady_state;

/// `⟨J†J⟩` below this marks a dark steady state.
pub const DARK_COLLECTIVE_TOL: f64 = 1e-12;
/// `⟨a†a⟩` below this marks an empty cavity.
pub const DARK_CAVITY_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Fail when a reported state puts more than [`CUTOFF_TOL`] in the top Fock level.
    pub check_cutoff: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: DEFAULT_RTOL, atol: DEFAULT_ATOL, check_cutoff: true }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

pub fn evolve(l: &LiouvillianMap, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    evolve_with(l, rho0, times, EvolveOptions::default())
}

pub fn evolve_with(l: &LiouvillianMap, rho0: &DensityMatrix, times: &[f64], opts: EvolveOptions) -> Result<Trajectory> {
    if rho0.space() != l.space() {
        return Err(Error::DimensionMismatch { expected: l.space().dim(), found: rho0.space().dim() });
    }
    if times.is_empty() {
        return Err(invalid("no output times"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("output times must be strictly increasing from t >= 0"));
    }
    let space = l.space();
    let mut states = Vec::with_capacity(times.len());
    propagate(l, rho0.matrix(), times, opts, |t, m| {
        let state = DensityMatrix::from_matrix_unchecked(space, m)?;
        if opts.check_cutoff {
            let population = state.top_fock_population();
            if population > CUTOFF_TOL {
                return Err(Error::CutoffViolation { population, time: t });
            }
        }
        states.push(state);
        Ok(())
    })?;
    Ok(Trajectory { times: times.to_vec(), states })
}

/// Propagate an arbitrary operator `m0` under `L` from `t = 0`. When `m0`
/// lies inside the excitation block only that block is integrated.
pub fn propagate<O>(l: &LiouvillianMap, m0: &DMatrix<C64>, times: &[f64], opts: EvolveOptions, mut out: O) -> Result<()>
where
    O: FnMut(f64, DMatrix<C64>) -> Result<()>,
{
    let d = l.space().dim();
    let full = l.matrix_form();
    let v0 = vectorize(m0);
    let block = l.excitation_block();
    let mut in_block = vec![false; d * d];
    block.iter().for_each(|&b| in_block[b] = true);
    let confined = v0.iter().enumerate().all(|(k, v)| in_block[k] || *v == C64::new(0.0, 0.0));

    let solver = Dopri5::new(opts.rtol, opts.atol);
    if confined {
        let sub = full.restrict(&block);
        let y0: Vec<C64> = block.iter().map(|&k| v0[k]).collect();
        let mut buf = vec![C64::new(0.0, 0.0); d * d];
        solver.integrate(
            |y, dy| sub.mul_vec_into(y, dy),
            0.0,
            &y0,
            times,
            |_, t, y| {
                for (&k, v) in block.iter().zip(y) {
                    buf[k] = *v;
                }
                out(t, unvectorize(&buf, d))
            },
        )?;
    } else {
        solver.integrate(|y, dy| full.mul_vec_into(y, dy), 0.0, &v0, times, |_, t, y| out(t, unvectorize(y, d)))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationKind {
    /// Collective emitter operator `J = Σ σ_i^−`.
    #[serde(rename = "collective-j", alias = "collective")]
    Collective,
    /// Cavity field `a`.
    #[serde(rename = "cavity-field", alias = "cavity")]
    CavityField,
    /// Photon counts summed over the separate radiative channels `σ_i^−`.
    /// Fields from different emitters never interfere, so at zero delay this
    /// is `Σ_{i≠j} ⟨z_i z_j⟩ / (Σ_i ⟨z_i⟩)²`.
    #[serde(rename = "emitter-channels", alias = "independent")]
    EmitterChannels,
}

#[derive(Clone, Debug)]
pub struct CorrelationCurve {
    pub kind: CorrelationKind,
    pub delays: Vec<f64>,
    pub values: Vec<f64>,
}

/// Detection channels `X_c`; a click on any of them counts as a photon.
fn channels(space: SpaceDescriptor, kind: CorrelationKind) -> Result<Vec<Operator>> {
    match kind {
        CorrelationKind::Collective => Ok(vec![collective_lowering(space)]),
        CorrelationKind::CavityField => Ok(vec![cavity_annihilation(space)?]),
        CorrelationKind::EmitterChannels => (1..=space.n_emitters()).map(|i| emitter_lowering(space, i)).collect(),
    }
}

/// `Σ_c X_c†X_c`.
fn total_number(xs: &[Operator]) -> Operator {
    let mut it = xs.iter().map(|x| &x.adjoint() * x);
    let first = it.next().expect("at least one channel");
    it.fold(first, |acc, n| &acc + &n)
}

/// `Σ_c ⟨X_c†X_c⟩`, rejecting dark states.
fn intensity(rho: &DensityMatrix, number: &Operator, kind: CorrelationKind) -> Result<f64> {
    let value = rho.expectation(number)?.re;
    let (tol, operator) = match kind {
        CorrelationKind::Collective => (DARK_COLLECTIVE_TOL, "J+J"),
        CorrelationKind::CavityField => (DARK_CAVITY_TOL, "a+a"),
        CorrelationKind::EmitterChannels => (DARK_COLLECTIVE_TOL, "sum z_i"),
    };
    if !(value > tol) {
        return Err(Error::DarkSteadyState { operator, value });
    }
    Ok(value)
}

/// Unnormalized conditional state `Σ_c X_c ρ X_c†`.
fn conditional_state(xs: &[Operator], rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = rho.nrows();
    xs.iter().fold(DMatrix::zeros(d, d), |acc, x| acc + x.adjoint().right_apply(&x.left_apply(rho)))
}

fn trace_with(number: &[(usize, usize, C64)], chi: &DMatrix<C64>) -> f64 {
    number.iter().map(|&(i, j, v)| v * chi[(j, i)]).sum::<C64>().re
}

/// Equal-time `g²(0)` for any state (not only stationary ones). For a single
/// channel this is `⟨X†X†XX⟩ / ⟨X†X⟩²`.
pub fn g2_zero_of(rho: &DensityMatrix, kind: CorrelationKind) -> Result<f64> {
    let xs = channels(rho.space(), kind)?;
    let number = total_number(&xs);
    let n1 = intensity(rho, &number, kind)?;
    let chi = conditional_state(&xs, rho.matrix());
    Ok(trace_with(&number.entries(), &chi) / (n1 * n1))
}

/// Steady-state `g²(0)` of the collective operator `J`.
pub fn g2_zero(space: SpaceDescriptor, params: &SystemParams) -> Result<f64> {
    g2_zero_kind(space, params, CorrelationKind::Collective)
}

/// Steady-state `g²(0)` of the cavity field `a`.
pub fn g2_cavity_zero(space: SpaceDescriptor, params: &SystemParams) -> Result<f64> {
    g2_zero_kind(space, params, CorrelationKind::CavityField)
}

pub fn g2_zero_kind(space: SpaceDescriptor, params: &SystemParams, kind: CorrelationKind) -> Result<f64> {
    let l = LiouvillianMap::build(space, params)?;
    g2_zero_of(&steady_state(&l)?, kind)
}

/// Steady-state `g²(τ)` of `J` at the requested delays.
pub fn g2_tau(space: SpaceDescriptor, params: &SystemParams, delays: &[f64]) -> Result<CorrelationCurve> {
    let l = LiouvillianMap::build(space, params)?;
    let rho = steady_state(&l)?;
    correlation_curve(&l, &rho, delays, CorrelationKind::Collective)
}

/// `g²(τ)` from a precomputed stationary state `rho_ss` of `l`.
pub fn correlation_curve(
    l: &LiouvillianMap,
    rho_ss: &DensityMatrix,
    delays: &[f64],
    kind: CorrelationKind,
) -> Result<CorrelationCurve> {
    if delays.is_empty() {
        return Err(invalid("no delays requested"));
    }
    if delays[0] < 0.0 || delays.windows(2).any(|w| w[1] <= w[0]) || delays.iter().any(|t| !t.is_finite()) {
        return Err(invalid("delays must be finite, non-negative and strictly increasing"));
    }
    let xs = channels(l.space(), kind)?;
    let number = total_number(&xs);
    let n1 = intensity(rho_ss, &number, kind)?;
    let number_entries = number.entries();
    let chi0 = conditional_state(&xs, rho_ss.matrix());
    let mut values = Vec::with_capacity(delays.len());
    let opts = EvolveOptions { check_cutoff: false, ..EvolveOptions::default() };
    propagate(l, &chi0, delays, opts, |_, chi| {
        values.push(trace_with(&number_entries, &chi) / (n1 * n1));
        Ok(())
    })?;
    Ok(CorrelationCurve { kind, delays: delays.to_vec(), values })
}
