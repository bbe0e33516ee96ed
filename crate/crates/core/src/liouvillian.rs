//! Tavis-Cummings Hamiltonian and the Lindblad generator
//!
//! ```text
//! H   = Σ_i [ δ_i σ_i^+σ_i^− + g (σ_i^+ a + σ_i^− a†) ]
//! L ρ = −i[H, ρ] + κ D[a] + Σ_i ( P D[σ_i^+] + γ D[z_i] + Γ_r D[σ_i^−] )
//! D[A] = A ρ A† − ½ (A†A ρ + ρ A†A)
//! ```
//!
//! Dephasing uses the projector `z_i = σ_i^+σ_i^−` as the jump operator, so an
//! emitter coherence decays at `γ/2` (not `2γ` as with a `σ_z` jump).
//!
//! All rates are in units of the coupling `g` (which defaults to 1). The
//! materialized superoperator acts on column-stacked density matrices:
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`, with `vec(ρ)[i + j·dim] = ρ_ij`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator::{cavity_annihilation, emitter_excitation, emitter_lowering, emitter_raising, Operator};
use crate::space::SpaceDescriptor;
use crate::sparse::CsrMatrix;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Emitter-cavity coupling `g`; the unit of every other rate.
    #[serde(default = "unit_coupling")]
    pub coupling: f64,
    /// Cavity loss `κ`.
    pub kappa: f64,
    /// Incoherent pump `P`.
    pub pump: f64,
    /// Pure dephasing `γ`.
    #[serde(default)]
    pub dephasing: f64,
    /// Spontaneous decay into non-cavity modes `Γ_r`.
    #[serde(default)]
    pub gamma_r: f64,
    /// Emitter-cavity detunings `δ_i`, one per emitter.
    pub detunings: Vec<f64>,
}

fn unit_coupling() -> f64 {
    1.0
}

impl SystemParams {
    /// Resonant emitters, `g = 1`, no dephasing or free-space decay.
    pub fn resonant(n_emitters: usize, kappa: f64, pump: f64) -> Self {
        Self { coupling: 1.0, kappa, pump, dephasing: 0.0, gamma_r: 0.0, detunings: vec![0.0; n_emitters] }
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.coupling = g;
        self
    }

    pub fn with_dephasing(mut self, gamma: f64) -> Self {
        self.dephasing = gamma;
        self
    }

    pub fn with_gamma_r(mut self, gamma_r: f64) -> Self {
        self.gamma_r = gamma_r;
        self
    }

    pub fn with_detunings(mut self, detunings: Vec<f64>) -> Self {
        self.detunings = detunings;
        self
    }

    pub fn validate(&self, n_emitters: usize) -> Result<()> {
        let rates = [
            ("coupling", self.coupling),
            ("kappa", self.kappa),
            ("pump", self.pump),
            ("dephasing", self.dephasing),
            ("gamma_r", self.gamma_r),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.detunings.len() != n_emitters {
            return Err(invalid(format!("detunings has length {}, expected {n_emitters}", self.detunings.len())));
        }
        if let Some(d) = self.detunings.iter().find(|d| !d.is_finite()) {
            return Err(invalid(format!("detuning {d} is not finite")));
        }
        Ok(())
    }

    /// True when at least one Lindblad channel is active.
    pub fn is_dissipative(&self) -> bool {
        self.kappa > 0.0 || self.pump > 0.0 || self.dephasing > 0.0 || self.gamma_r > 0.0
    }

    /// Smallest strictly positive dissipative rate.
    pub fn min_dissipative_rate(&self) -> Option<f64> {
        [self.kappa, self.pump, self.dephasing, self.gamma_r].into_iter().filter(|&r| r > 0.0).reduce(f64::min)
    }

    /// Every rate (coupling and detunings included) multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coupling: self.coupling * s,
            kappa: self.kappa * s,
            pump: self.pump * s,
            dephasing: self.dephasing * s,
            gamma_r: self.gamma_r * s,
            detunings: self.detunings.iter().map(|d| d * s).collect(),
        }
    }
}

/// Tavis-Cummings Hamiltonian in the rotating frame.
pub fn hamiltonian(space: SpaceDescriptor, params: &SystemParams) -> Result<Operator> {
    params.validate(space.n_emitters())?;
    let a = cavity_annihilation(space)?;
    let ad = a.adjoint();
    let g = C64::new(params.coupling, 0.0);
    let mut h = Operator::zero(space);
    for i in 1..=space.n_emitters() {
        let sm = emitter_lowering(space, i)?;
        let sp = sm.adjoint();
        let delta = params.detunings[i - 1];
        if delta != 0.0 {
            h = h.add_scaled(&emitter_excitation(space, i)?, C64::new(delta, 0.0))?;
        }
        if params.coupling != 0.0 {
            h = h.add_scaled(&(&sp * &a), g)?;
            h = h.add_scaled(&(&sm * &ad), g)?;
        }
    }
    Ok(h)
}

/// `D[A](ρ) = A ρ A† − ½ (A†A ρ + ρ A†A)`.
pub fn dissipator(a: &Operator, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if rho.nrows() != a.dim() || rho.ncols() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: rho.nrows() });
    }
    let ad = a.adjoint();
    let ada = &ad * a;
    let jump = ad.right_apply(&a.left_apply(rho));
    let anti = ada.left_apply(rho) + ada.right_apply(rho);
    Ok(jump - anti * C64::new(0.5, 0.0))
}

/// One Lindblad channel `rate · D[op]`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub label: String,
    pub rate: f64,
    pub op: Operator,
    op_dag: Operator,
}

/// The generator `L` of the master equation.
#[derive(Debug)]
pub struct LiouvillianMap {
    space: SpaceDescriptor,
    params: SystemParams,
    hamiltonian: Operator,
    jumps: Vec<Jump>,
    /// `H − (i/2) Σ rate·A†A`
    h_eff: Operator,
    matrix: OnceLock<CsrMatrix>,
}

impl LiouvillianMap {
    pub fn build(space: SpaceDescriptor, params: &SystemParams) -> Result<Self> {
        if !space.has_cavity() {
            return Err(invalid("fock_cutoff must be at least 1"));
        }
        let hamiltonian = hamiltonian(space, params)?;
        let mut jumps = Vec::new();
        let mut push = |label: String, rate: f64, op: Operator| {
            if rate > 0.0 {
                let op_dag = op.adjoint();
                jumps.push(Jump { label, rate, op, op_dag });
            }
        };
        push("kappa a".into(), params.kappa, cavity_annihilation(space)?);
        for i in 1..=space.n_emitters() {
            push(format!("pump s+_{i}"), params.pump, emitter_raising(space, i)?);
            push(format!("dephasing z_{i}"), params.dephasing, emitter_excitation(space, i)?);
            push(format!("gamma_r s-_{i}"), params.gamma_r, emitter_lowering(space, i)?);
        }
        let mut h_eff = hamiltonian.clone();
        for j in &jumps {
            h_eff = h_eff.add_scaled(&(&j.op_dag * &j.op), C64::new(0.0, -0.5 * j.rate))?;
        }
        Ok(Self { space, params: params.clone(), hamiltonian, jumps, h_eff, matrix: OnceLock::new() })
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Matrix-free `L(ρ)`.
    pub fn apply(&self, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let d = self.space.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
        }
        let heff_rho = self.h_eff.left_apply(rho);
        let rho_heff_dag = self.h_eff.adjoint().right_apply(rho);
        let mut out = (heff_rho * -I) + rho_heff_dag * I;
        for j in &self.jumps {
            out += j.op_dag.right_apply(&j.op.left_apply(rho)) * C64::new(j.rate, 0.0);
        }
        Ok(out)
    }

    /// Sparse `dim² × dim²` superoperator on column-stacked `ρ`, built on
    /// first use.
    pub fn matrix_form(&self) -> &CsrMatrix {
        self.matrix.get_or_init(|| self.assemble())
    }

    fn assemble(&self) -> CsrMatrix {
        let d = self.space.dim();
        let heff = self.h_eff.entries();
        let mut t = Vec::with_capacity(2 * heff.len() * d);
        for &(i, k, v) in &heff {
            for j in 0..d {
                t.push((i + j * d, k + j * d, -I * v));
            }
        }
        for &(j, l, v) in &heff {
            for i in 0..d {
                t.push((i + j * d, i + l * d, I * v.conj()));
            }
        }
        for jump in &self.jumps {
            let entries = jump.op.entries();
            let r = C64::new(jump.rate, 0.0);
            for &(i, k, a) in &entries {
                for &(j, l, b) in &entries {
                    t.push((i + j * d, k + l * d, r * a * b.conj()));
                }
            }
        }
        CsrMatrix::from_triplets(d * d, d * d, t)
    }

    /// Indices of `vec(ρ)` whose row and column states carry the same total
    /// excitation number. `L` maps this block onto itself, and every steady
    /// state reached from a population-diagonal state lives in it.
    pub fn excitation_block(&self) -> Vec<usize> {
        let d = self.space.dim();
        let exc: Vec<usize> = (0..d).map(|i| self.space.excitation_number(i)).collect();
        (0..d * d).filter(|&v| exc[v % d] == exc[v / d]).collect()
    }
}

/// Column-stacked `vec(ρ)`.
pub fn vectorize(m: &DMatrix<C64>) -> Vec<C64> {
    m.as_slice().to_vec()
}

pub fn unvectorize(v: &[C64], dim: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(dim, dim, v)
}

pub fn build_liouvillian(space: SpaceDescriptor, params: &SystemParams) -> Result<LiouvillianMap> {
    LiouvillianMap::build(space, params)
}
