//! Composite Hilbert space of `N` two-level emitters and one truncated cavity mode.
//!
//! Basis ordering is fixed: emitter 1 ⊗ … ⊗ emitter N ⊗ cavity. A basis index is
//! `bits * (n_max + 1) + n`, where `bits` holds one bit per emitter (g = 0,
//! e = 1) with emitter 1 in the most significant position, and `n` is the
//! photon number.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Hard ceiling on the emitter count so that `2^N` cannot overflow and dense
/// matrices stay addressable.
pub const MAX_EMITTERS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SpaceDescriptor {
    n_emitters: usize,
    fock_cutoff: usize,
}

impl SpaceDescriptor {
    pub fn new(n_emitters: usize, fock_cutoff: usize) -> Result<Self> {
        if n_emitters == 0 {
            return Err(invalid("n_emitters must be at least 1"));
        }
        if n_emitters > MAX_EMITTERS {
            return Err(invalid(format!("n_emitters = {n_emitters} exceeds the supported maximum {MAX_EMITTERS}")));
        }
        if fock_cutoff == 0 {
            return Err(invalid("fock_cutoff must be at least 1"));
        }
        if fock_cutoff > 1 << 16 {
            return Err(invalid(format!("fock_cutoff = {fock_cutoff} is unreasonably large")));
        }
        Ok(Self { n_emitters, fock_cutoff })
    }

    /// Emitter-only space (cavity factor of dimension one). Produced by the
    /// partial trace over the cavity.
    pub fn emitters_only(n_emitters: usize) -> Result<Self> {
        if n_emitters == 0 || n_emitters > MAX_EMITTERS {
            return Err(invalid(format!("unsupported emitter count {n_emitters}")));
        }
        Ok(Self { n_emitters, fock_cutoff: 0 })
    }

    pub fn n_emitters(&self) -> usize {
        self.n_emitters
    }

    /// Highest retained photon number `n_max` (0 for an emitter-only space).
    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn has_cavity(&self) -> bool {
        self.fock_cutoff > 0
    }

    pub fn cavity_levels(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn emitter_states(&self) -> usize {
        1 << self.n_emitters
    }

    pub fn dim(&self) -> usize {
        self.emitter_states() * self.cavity_levels()
    }

    #[inline]
    pub fn index(&self, emitter_bits: usize, photons: usize) -> usize {
        debug_assert!(emitter_bits < self.emitter_states() && photons <= self.fock_cutoff);
        emitter_bits * self.cavity_levels() + photons
    }

    /// Inverse of [`index`](Self::index): `(emitter_bits, photons)`.
    #[inline]
    pub fn decompose(&self, index: usize) -> (usize, usize) {
        (index / self.cavity_levels(), index % self.cavity_levels())
    }

    /// Bit mask of emitter `i` (1-based) inside `emitter_bits`.
    #[inline]
    pub fn emitter_mask(&self, i: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.n_emitters);
        1 << (self.n_emitters - i)
    }

    pub fn check_emitter(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n_emitters {
            return Err(invalid(format!("emitter index {i} out of range 1..={}", self.n_emitters)));
        }
        Ok(())
    }

    /// Total excitation number (excited emitters plus photons) of a basis state.
    #[inline]
    pub fn excitation_number(&self, index: usize) -> usize {
        let (bits, n) = self.decompose(index);
        bits.count_ones() as usize + n
    }

    /// Emitter-bit pattern with every emitter excited.
    pub fn all_excited(&self) -> usize {
        self.emitter_states() - 1
    }
}
