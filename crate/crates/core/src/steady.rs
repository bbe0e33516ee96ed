//! Stationary states of the master equation.
//!
//! The generator is restricted to the excitation-number-diagonal block (see
//! [`LiouvillianMap::excitation_block`]), the row for `dρ_00/dt` is replaced
//! by the trace condition, and the resulting dense system is LU-solved. The
//! answer is then verified: residual, trace, Hermiticity and positivity.
//! A near-singular factorization or a failed check triggers an SVD of the
//! block to tell a degenerate null space apart from a numerical failure.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::dynamics::{evolve_with, EvolveOptions};
use crate::error::{invalid, Error, Result};
use crate::liouvillian::{vectorize, LiouvillianMap};
use crate::state::{DensityMatrix, POSITIVITY_TOL, TRACE_TOL};

/// Residual bound per matrix dimension: `‖L ρ‖₁ ≤ RESIDUAL_TOL · dim`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative size of the second-smallest singular value below which the null
/// space is declared degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Pivot ratio below which the LU factorization is treated as suspect.
const PIVOT_RATIO_TOL: f64 = 1e-13;

pub fn steady_state(l: &LiouvillianMap) -> Result<DensityMatrix> {
    if !l.params().is_dissipative() {
        return Err(Error::NoUniqueSteadyState);
    }
    let space = l.space();
    let d = space.dim();
    let block = l.excitation_block();
    let generator = l.matrix_form().restrict(&block).to_dense();
    let m = block.len();

    // Position of ρ_00 inside the block (vec index 0 always belongs to it).
    let anchor = block.iter().position(|&v| v == 0).expect("ρ_00 is in the block");
    let mut system = generator.clone();
    system.row_mut(anchor).fill(C64::new(0.0, 0.0));
    for (k, &v) in block.iter().enumerate() {
        if v % d == v / d {
            system[(anchor, k)] = C64::new(1.0, 0.0);
        }
    }
    let mut rhs = DVector::zeros(m);
    rhs[anchor] = C64::new(1.0, 0.0);

    let lu = system.lu();
    let u = lu.u();
    let (pmin, pmax) =
        u.diagonal().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.norm()), hi.max(p.norm())));
    if !(pmin > PIVOT_RATIO_TOL * pmax) {
        return Err(diagnose(&generator).unwrap_or_else(|| {
            Error::SteadyStateVerification(format!("ill-conditioned system (pivot ratio {:.3e})", pmin / pmax))
        }));
    }
    let Some(x) = lu.solve(&rhs) else {
        return Err(diagnose(&generator).unwrap_or(Error::SteadyStateVerification("singular system".into())));
    };

    let mut rho = DMatrix::zeros(d, d);
    for (k, &v) in block.iter().enumerate() {
        rho[(v % d, v / d)] = x[k];
    }
    match verify(l, rho) {
        Ok(state) => Ok(state),
        Err(e) => Err(diagnose(&generator).unwrap_or(e)),
    }
}

fn verify(l: &LiouvillianMap, mut rho: DMatrix<C64>) -> Result<DensityMatrix> {
    let d = l.space().dim();
    let scale = rho.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
    let anti = (&rho - rho.adjoint()).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if anti > 1e-10 * scale {
        return Err(Error::SteadyStateVerification(format!("solution not Hermitian (|ρ−ρ†| = {anti:.3e})")));
    }
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::SteadyStateVerification(format!("trace {tr} differs from 1")));
    }
    rho /= C64::new(tr.re, 0.0);
    let residual: f64 = l.matrix_form().mul_vec(&vectorize(&rho)).iter().map(|v| v.norm()).sum();
    if !(residual <= RESIDUAL_TOL * d as f64) {
        return Err(Error::SteadyStateVerification(format!("residual ‖Lρ‖₁ = {residual:.3e}")));
    }
    let state = DensityMatrix::from_matrix_unchecked(l.space(), rho)?;
    let min = state.min_eigenvalue();
    if !(min >= POSITIVITY_TOL) {
        return Err(Error::SteadyStateVerification(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(state)
}

/// `Some(MultipleSteadyStates)` when the block generator has a numerically
/// degenerate null space.
fn diagnose(generator: &DMatrix<C64>) -> Option<Error> {
    let sv = generator.singular_values();
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|a, b| a.total_cmp(b));
    let norm = *s.last()?;
    let (smallest, second) = (s[0], *s.get(1)?);
    (second <= DEGENERACY_TOL * norm).then_some(Error::MultipleSteadyStates { smallest, second, norm })
}

/// Long-time limit of the dynamics; an independent route to the steady state.
pub fn steady_state_by_evolution(l: &LiouvillianMap, t_final: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(invalid(format!("t_final must be positive, got {t_final}")));
    }
    let traj = evolve_with(l, rho0, &[t_final], EvolveOptions { check_cutoff: false, ..EvolveOptions::default() })?;
    Ok(traj.states.into_iter().next().expect("one output time"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::SystemParams;
    use crate::space::SpaceDescriptor;

    #[test]
    fn empty_system_relaxes_to_vacuum() {
        let s = SpaceDescriptor::new(2, 2).unwrap();
        let p = SystemParams::resonant(2, 1.0, 0.0).with_gamma_r(0.1);
        let rho = steady_state(&LiouvillianMap::build(s, &p).unwrap()).unwrap();
        let target = DensityMatrix::basis(s, 0, 0).unwrap();
        assert!((rho.matrix() - target.matrix()).norm() < 1e-12);
    }

    #[test]
    fn two_level_rate_balance() {
        let s = SpaceDescriptor::new(1, 1).unwrap();
        let p = SystemParams::resonant(1, 1.0, 0.3).with_coupling(0.0).with_gamma_r(0.7);
        let rho = steady_state(&LiouvillianMap::build(s, &p).unwrap()).unwrap();
        let pe = rho.matrix()[(s.index(1, 0), s.index(1, 0))].re;
        assert!((pe - 0.3).abs() < 1e-12);
    }

    #[test]
    fn closed_system_has_no_unique_state() {
        let s = SpaceDescriptor::new(1, 1).unwrap();
        let l = LiouvillianMap::build(s, &SystemParams::resonant(1, 0.0, 0.0)).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::NoUniqueSteadyState)));
    }

    #[test]
    fn dark_state_degeneracy_is_reported() {
        // Without pumping or free-space decay both |gg,0> and |−,0> are stationary.
        let s = SpaceDescriptor::new(2, 2).unwrap();
        let l = LiouvillianMap::build(s, &SystemParams::resonant(2, 1.0, 0.0)).unwrap();
        match steady_state(&l) {
            Err(Error::MultipleSteadyStates { smallest, second, norm }) => {
                assert!(smallest <= second && second <= DEGENERACY_TOL * norm);
            }
            other => panic!("expected MultipleSteadyStates, got {other:?}"),
        }
    }

    #[test]
    fn rejects_nonpositive_final_time() {
        let s = SpaceDescriptor::new(1, 1).unwrap();
        let l = LiouvillianMap::build(s, &SystemParams::resonant(1, 1.0, 0.1)).unwrap();
        let rho0 = DensityMatrix::basis(s, 0, 0).unwrap();
        assert!(steady_state_by_evolution(&l, 0.0, &rho0).is_err());
    }
}
