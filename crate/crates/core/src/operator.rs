//! Operators on the composite emitter ⊗ cavity space.
//!
//! Below [`DENSE_DIM_LIMIT`] operators are stored densely, above it as CSR.
//! Both representations expose the same API and the same numbers.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::space::SpaceDescriptor;
use crate::sparse::CsrMatrix;

pub const DENSE_DIM_LIMIT: usize = 128;

#[derive(Clone, Debug)]
enum Repr {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix),
}

#[derive(Clone, Debug)]
pub struct Operator {
    space: SpaceDescriptor,
    repr: Repr,
}

impl Operator {
    /// Build from `(row, col, value)` triplets, picking the representation by
    /// dimension.
    pub fn from_triplets(space: SpaceDescriptor, triplets: Vec<(usize, usize, C64)>) -> Self {
        let dim = space.dim();
        let sparse = CsrMatrix::from_triplets(dim, dim, triplets);
        Self::from_csr_auto(space, sparse)
    }

    fn from_csr_auto(space: SpaceDescriptor, m: CsrMatrix) -> Self {
        if space.dim() < DENSE_DIM_LIMIT {
            Self { space, repr: Repr::Dense(m.to_dense()) }
        } else {
            Self { space, repr: Repr::Sparse(m) }
        }
    }

    pub fn from_dense(space: SpaceDescriptor, m: DMatrix<C64>) -> Result<Self> {
        check_square(&space, m.nrows(), m.ncols())?;
        Ok(Self { space, repr: Repr::Dense(m) })
    }

    pub fn from_csr(space: SpaceDescriptor, m: CsrMatrix) -> Result<Self> {
        check_square(&space, m.nrows(), m.ncols())?;
        Ok(Self { space, repr: Repr::Sparse(m) })
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        Self::from_csr_auto(space, CsrMatrix::identity(space.dim()))
    }

    pub fn zero(space: SpaceDescriptor) -> Self {
        Self::from_csr_auto(space, CsrMatrix::zeros(space.dim(), space.dim()))
    }

    /// `|ψ⟩⟨ψ|` (not normalized).
    pub fn outer(space: SpaceDescriptor, psi: &DVector<C64>) -> Result<Self> {
        check_square(&space, psi.len(), psi.len())?;
        let m = psi * psi.adjoint();
        Ok(Self::from_csr_auto(space, CsrMatrix::from_dense(&m)))
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse(_))
    }

    pub fn to_sparse(&self) -> Self {
        Self { space: self.space, repr: Repr::Sparse(self.csr()) }
    }

    pub fn to_dense_repr(&self) -> Self {
        Self { space: self.space, repr: Repr::Dense(self.to_dense()) }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse(m) => m.to_dense(),
        }
    }

    pub fn csr(&self) -> CsrMatrix {
        match &self.repr {
            Repr::Dense(m) => CsrMatrix::from_dense(m),
            Repr::Sparse(m) => m.clone(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        match &self.repr {
            Repr::Dense(m) => m[(row, col)],
            Repr::Sparse(m) => m.get(row, col),
        }
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        match &self.repr {
            Repr::Dense(m) => {
                let mut out = Vec::new();
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let v = m[(i, j)];
                        if v != C64::new(0.0, 0.0) {
                            out.push((i, j, v));
                        }
                    }
                }
                out
            }
            Repr::Sparse(m) => m.iter().collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.adjoint()),
            Repr::Sparse(m) => Repr::Sparse(m.adjoint()),
        };
        Self { space: self.space, repr }
    }

    pub fn scale(&self, s: C64) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m * s),
            Repr::Sparse(m) => Repr::Sparse(m.scale(s)),
        };
        Self { space: self.space, repr }
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Result<Self> {
        self.check_same_space(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a + b * s),
            _ => Repr::Sparse(self.csr().add_scaled(&other.csr(), s)),
        };
        Ok(Self { space: self.space, repr })
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a * b),
            (Repr::Sparse(a), Repr::Sparse(b)) => Repr::Sparse(a.matmul(b)),
            _ => Repr::Sparse(self.csr().matmul(&other.csr())),
        };
        Ok(Self { space: self.space, repr })
    }

    /// `X · M` for a dense `M`.
    pub fn left_apply(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        match &self.repr {
            Repr::Dense(x) => x * m,
            Repr::Sparse(x) => x.mul_dense(m),
        }
    }

    /// `M · X` for a dense `M`.
    pub fn right_apply(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        match &self.repr {
            Repr::Dense(x) => m * x,
            Repr::Sparse(x) => x.dense_mul(m),
        }
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        match &self.repr {
            Repr::Dense(x) => x * v,
            Repr::Sparse(x) => DVector::from_vec(x.mul_vec(v.as_slice())),
        }
    }

    /// `X^k`.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.space);
        for _ in 0..k {
            out = out.compose(self).expect("same space");
        }
        out
    }

    /// Largest absolute entry of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_space(other)?;
        Ok((self.to_dense() - other.to_dense()).iter().fold(0.0, |m, v| m.max(v.norm())))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, e| m.max(e.2.norm()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()).map(|d| d <= tol).unwrap_or(false)
    }
}

fn check_square(space: &SpaceDescriptor, rows: usize, cols: usize) -> Result<()> {
    if rows != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: rows });
    }
    if cols != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: cols });
    }
    Ok(())
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.add_scaled(rhs, C64::new(1.0, 0.0)).expect("operator spaces differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.add_scaled(rhs, C64::new(-1.0, 0.0)).expect("operator spaces differ")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.compose(rhs).expect("operator spaces differ")
    }
}

// ---------------------------------------------------------------------------
// Standard operators
// ---------------------------------------------------------------------------

pub fn build_space(n_emitters: usize, fock_cutoff: usize) -> Result<SpaceDescriptor> {
    SpaceDescriptor::new(n_emitters, fock_cutoff)
}

/// Cavity annihilation `a` (identity on the emitters), `⟨n−1|a|n⟩ = √n`.
pub fn cavity_annihilation(space: SpaceDescriptor) -> Result<Operator> {
    if !space.has_cavity() {
        return Err(invalid("space has no cavity mode"));
    }
    let mut t = Vec::new();
    for bits in 0..space.emitter_states() {
        for n in 1..=space.fock_cutoff() {
            t.push((space.index(bits, n - 1), space.index(bits, n), C64::new((n as f64).sqrt(), 0.0)));
        }
    }
    Ok(Operator::from_triplets(space, t))
}

/// `σ_i^− = |g⟩_i⟨e|_i` on emitter `i` (1-based).
pub fn emitter_lowering(space: SpaceDescriptor, i: usize) -> Result<Operator> {
    space.check_emitter(i)?;
    Ok(Operator::from_triplets(space, lowering_triplets(space, i)))
}

fn lowering_triplets(space: SpaceDescriptor, i: usize) -> Vec<(usize, usize, C64)> {
    let mask = space.emitter_mask(i);
    let mut t = Vec::new();
    for bits in (0..space.emitter_states()).filter(|b| b & mask != 0) {
        for n in 0..space.cavity_levels() {
            t.push((space.index(bits & !mask, n), space.index(bits, n), C64::new(1.0, 0.0)));
        }
    }
    t
}

pub fn emitter_raising(space: SpaceDescriptor, i: usize) -> Result<Operator> {
    Ok(emitter_lowering(space, i)?.adjoint())
}

/// Excited-state projector `z_i = σ_i^+ σ_i^−`.
pub fn emitter_excitation(space: SpaceDescriptor, i: usize) -> Result<Operator> {
    space.check_emitter(i)?;
    let mask = space.emitter_mask(i);
    let t = (0..space.dim())
        .filter(|&idx| space.decompose(idx).0 & mask != 0)
        .map(|idx| (idx, idx, C64::new(1.0, 0.0)))
        .collect();
    Ok(Operator::from_triplets(space, t))
}

/// Collective lowering `J = Σ_i σ_i^−`.
pub fn collective_lowering(space: SpaceDescriptor) -> Operator {
    let t = (1..=space.n_emitters()).flat_map(|i| lowering_triplets(space, i)).collect();
    Operator::from_triplets(space, t)
}

/// Cavity photon number `a†a`.
pub fn photon_number(space: SpaceDescriptor) -> Result<Operator> {
    let a = cavity_annihilation(space)?;
    Ok(&a.adjoint() * &a)
}

/// Basis ket `|bits, n⟩`.
pub fn basis_ket(space: SpaceDescriptor, emitter_bits: usize, photons: usize) -> Result<DVector<C64>> {
    if emitter_bits >= space.emitter_states() || photons > space.fock_cutoff() {
        return Err(invalid(format!("basis state ({emitter_bits:#b}, {photons}) outside space")));
    }
    let mut v = DVector::zeros(space.dim());
    v[space.index(emitter_bits, photons)] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Two-emitter Dicke kets `|±⟩ ⊗ |n⟩ = (|eg⟩ ± |ge⟩)/√2 ⊗ |n⟩` (requires N = 2).
pub fn dicke_ket(space: SpaceDescriptor, symmetric: bool, photons: usize) -> Result<DVector<C64>> {
    if space.n_emitters() != 2 {
        return Err(Error::UnsupportedEmitterCount(space.n_emitters()));
    }
    let eg = basis_ket(space, 0b10, photons)?;
    let ge = basis_ket(space, 0b01, photons)?;
    let s = if symmetric { 1.0 } else { -1.0 };
    Ok((eg + ge * C64::new(s, 0.0)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}

/// Operator swapping emitters `i` and `j` (a permutation of basis states).
pub fn emitter_swap(space: SpaceDescriptor, i: usize, j: usize) -> Result<Operator> {
    space.check_emitter(i)?;
    space.check_emitter(j)?;
    let (mi, mj) = (space.emitter_mask(i), space.emitter_mask(j));
    let t = (0..space.dim())
        .map(|idx| {
            let (bits, n) = space.decompose(idx);
            let bi = bits & mi != 0;
            let bj = bits & mj != 0;
            let mut out = bits & !mi & !mj;
            if bi {
                out |= mj;
            }
            if bj {
                out |= mi;
            }
            (space.index(out, n), idx, C64::new(1.0, 0.0))
        })
        .collect();
    Ok(Operator::from_triplets(space, t))
}
