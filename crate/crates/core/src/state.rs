//! Density matrices on the composite space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::operator::Operator;
use crate::space::SpaceDescriptor;

/// Largest tolerated `|ρ − ρ†|` entry.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Largest tolerated `|tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative tolerated eigenvalue.
pub const POSITIVITY_TOL: f64 = -1e-8;
/// Top-Fock-level population above which a state is cutoff-invalid.
pub const CUTOFF_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: SpaceDescriptor,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wrap a matrix after checking Hermiticity, unit trace and positivity.
    pub fn new(space: SpaceDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(space, matrix)?;
        rho.check()?;
        Ok(rho)
    }

    /// Wrap a matrix checking only its shape. Intended for intermediate
    /// results (e.g. integrator output) that are verified separately.
    pub fn from_matrix_unchecked(space: SpaceDescriptor, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    /// `|ψ⟩⟨ψ|` for the normalized `ψ`.
    pub fn pure(space: SpaceDescriptor, psi: &DVector<C64>) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: psi.len() });
        }
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(invalid("state vector has zero or non-finite norm"));
        }
        let v = psi.unscale(norm);
        Ok(Self { space, matrix: &v * v.adjoint() })
    }

    /// `|bits, n⟩⟨bits, n|`.
    pub fn basis(space: SpaceDescriptor, emitter_bits: usize, photons: usize) -> Result<Self> {
        let psi = crate::operator::basis_ket(space, emitter_bits, photons)?;
        Self::pure(space, &psi)
    }

    /// Diagonal state with the given basis populations (must sum to one).
    pub fn diagonal(space: SpaceDescriptor, populations: &[f64]) -> Result<Self> {
        if populations.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: populations.len() });
        }
        if populations.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidState("populations must be finite and non-negative".into()));
        }
        let sum: f64 = populations.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("populations sum to {sum}, not 1")));
        }
        let d = DVector::from_iterator(space.dim(), populations.iter().map(|&p| C64::new(p, 0.0)));
        Ok(Self { space, matrix: DMatrix::from_diagonal(&d) })
    }

    pub fn maximally_mixed(space: SpaceDescriptor) -> Self {
        let d = space.dim();
        Self { space, matrix: DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0) }
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if !(herm <= HERMITICITY_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (max |ρ−ρ†| = {herm:.3e})")));
        }
        let tr = self.trace();
        if !((tr - C64::new(1.0, 0.0)).norm() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if !(min >= POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Total population in the highest retained Fock level.
    pub fn top_fock_population(&self) -> f64 {
        if !self.space.has_cavity() {
            return 0.0;
        }
        let top = self.space.fock_cutoff();
        (0..self.space.emitter_states())
            .map(|b| self.matrix[(self.space.index(b, top), self.space.index(b, top))].re)
            .sum()
    }

    pub fn violates_cutoff(&self) -> bool {
        self.top_fock_population() > CUTOFF_TOL
    }

    /// `tr(X ρ)`.
    pub fn expectation(&self, x: &Operator) -> Result<C64> {
        expectation(self, x)
    }

    /// Reduced emitter state `tr_cavity ρ`.
    pub fn partial_trace_cavity(&self) -> Result<DensityMatrix> {
        partial_trace_cavity(self)
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Result<DensityMatrix> {
        if u.space() != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: u.dim() });
        }
        let full = u.adjoint().right_apply(&u.left_apply(&self.matrix));
        Self::from_matrix_unchecked(self.space, full)
    }
}

/// `tr(X ρ)`.
pub fn expectation(rho: &DensityMatrix, x: &Operator) -> Result<C64> {
    if x.space() != rho.space() {
        return Err(Error::DimensionMismatch { expected: rho.space().dim(), found: x.dim() });
    }
    let m = rho.matrix();
    Ok(x.entries().iter().map(|&(i, j, v)| v * m[(j, i)]).sum())
}

/// Trace out the cavity, leaving a `2^N × 2^N` emitter state.
pub fn partial_trace_cavity(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let space = rho.space();
    let reduced_space = SpaceDescriptor::emitters_only(space.n_emitters())?;
    let e = space.emitter_states();
    let m = rho.matrix();
    let reduced = DMatrix::from_fn(e, e, |a, b| {
        (0..space.cavity_levels()).map(|n| m[(space.index(a, n), space.index(b, n))]).sum()
    });
    DensityMatrix::from_matrix_unchecked(reduced_space, reduced)
}
