//! Independent reference constructions for the integration tests.
//!
//! Operators are built from explicit Kronecker products of 2×2 and
//! (n_max+1)×(n_max+1) factors, and the generator from `Bᵀ ⊗ A` blocks, so
//! none of the library's index arithmetic is reused.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use subradiance::{DensityMatrix, SpaceDescriptor, SystemParams};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn kron_all(factors: &[DMatrix<C64>]) -> DMatrix<C64> {
    factors.iter().skip(1).fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// `|g⟩⟨e|` with `g = index 0`, `e = index 1`.
pub fn sigma_minus_2x2() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)])
}

pub fn ladder(n_max: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n_max + 1, n_max + 1, |i, j| if j == i + 1 { c((j as f64).sqrt()) } else { c(0.0) })
}

/// `σ_i^−` on emitter `i` (1-based) as emitter_1 ⊗ … ⊗ emitter_N ⊗ cavity.
pub fn ref_lowering(n: usize, n_max: usize, i: usize) -> DMatrix<C64> {
    let mut f: Vec<DMatrix<C64>> =
        (1..=n).map(|k| if k == i { sigma_minus_2x2() } else { DMatrix::identity(2, 2) }).collect();
    f.push(DMatrix::identity(n_max + 1, n_max + 1));
    kron_all(&f)
}

pub fn ref_annihilation(n: usize, n_max: usize) -> DMatrix<C64> {
    let mut f: Vec<DMatrix<C64>> = (0..n).map(|_| DMatrix::identity(2, 2)).collect();
    f.push(ladder(n_max));
    kron_all(&f)
}

pub fn ref_hamiltonian(n: usize, n_max: usize, p: &SystemParams) -> DMatrix<C64> {
    let a = ref_annihilation(n, n_max);
    let d = a.nrows();
    let mut h = DMatrix::zeros(d, d);
    for i in 1..=n {
        let s = ref_lowering(n, n_max, i);
        let sd = s.adjoint();
        h += &sd * &s * c(p.detunings[i - 1]) + (&sd * &a + &s * a.adjoint()) * c(p.coupling);
    }
    h
}

/// Dense superoperator on column-stacked matrices.
pub fn ref_liouvillian(n: usize, n_max: usize, p: &SystemParams) -> DMatrix<C64> {
    let h = ref_hamiltonian(n, n_max, p);
    let d = h.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let i = C64::new(0.0, 1.0);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-i);
    let mut jumps = vec![(p.kappa, ref_annihilation(n, n_max))];
    for k in 1..=n {
        let s = ref_lowering(n, n_max, k);
        jumps.push((p.pump, s.adjoint()));
        jumps.push((p.dephasing, s.adjoint() * &s));
        jumps.push((p.gamma_r, s));
    }
    for (rate, a) in jumps {
        let ada = a.adjoint() * &a;
        l += (a.conjugate().kronecker(&a) - id.kronecker(&ada) * c(0.5) - ada.transpose().kronecker(&id) * c(0.5))
            * c(rate);
    }
    l
}

pub fn vec_of(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let m = DMatrix::from_fn(d, d, |_, _| random_complex(rng));
    (&m + m.adjoint()) * c(0.5)
}

/// Random full-rank density matrix `G G† / tr(G G†)`.
pub fn random_state<R: Rng>(rng: &mut R, space: SpaceDescriptor) -> DensityMatrix {
    let d = space.dim();
    let g = DMatrix::from_fn(d, d, |_, _| random_complex(rng));
    let m = &g * g.adjoint();
    let tr = m.trace();
    let mut rho = m / tr;
    // Enforce exact Hermiticity after the division.
    rho = (&rho + rho.adjoint()) * c(0.5);
    DensityMatrix::new(space, rho).expect("valid random state")
}

pub fn random_params<R: Rng>(rng: &mut R, n: usize) -> SystemParams {
    let mut u = |lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi));
    SystemParams {
        coupling: u(-0.5, 0.5),
        kappa: u(-1.0, 1.5),
        pump: u(-3.0, 1.0),
        dephasing: u(-2.0, 0.5),
        gamma_r: u(-3.0, -0.5),
        detunings: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}
