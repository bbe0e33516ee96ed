//! Dicke populations, population contrast and the cooperativity parameter.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::DARK_COLLECTIVE_TOL;
use crate::error::{Error, Result};
use crate::operator::{collective_lowering, emitter_excitation};
use crate::state::DensityMatrix;

/// Largest tolerated imaginary part of a projector expectation.
pub const IMAGINARY_TOL: f64 = 1e-10;
/// `p_plus` at or below this makes the contrast undefined.
pub const CONTRAST_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DickePopulations {
    pub p_gg: f64,
    pub p_ee: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    /// `1 − (p_gg + p_ee + p_plus + p_minus)`.
    pub residual: f64,
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOL {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// Populations of `|gg⟩, |ee⟩, |±⟩ = (|eg⟩ ± |ge⟩)/√2` after tracing out the cavity.
pub fn dicke_populations(rho: &DensityMatrix) -> Result<DickePopulations> {
    let n = rho.space().n_emitters();
    if n != 2 {
        return Err(Error::UnsupportedEmitterCount(n));
    }
    let red = rho.partial_trace_cavity()?;
    let m = red.matrix();
    // Emitter 1 is the high bit: gg = 0, ge = 1, eg = 2, ee = 3.
    let (ge, eg) = (1, 2);
    let half = C64::new(0.5, 0.0);
    let sym = (m[(eg, eg)] + m[(ge, ge)]) * half;
    let cross = (m[(eg, ge)] + m[(ge, eg)]) * half;
    let p_gg = real_part(m[(0, 0)])?;
    let p_ee = real_part(m[(3, 3)])?;
    let p_plus = real_part(sym + cross)?;
    let p_minus = real_part(sym - cross)?;
    Ok(DickePopulations { p_gg, p_ee, p_plus, p_minus, residual: 1.0 - (p_gg + p_ee + p_plus + p_minus) })
}

/// `(p_plus − p_minus) / p_plus`.
pub fn population_contrast(p: &DickePopulations) -> Result<f64> {
    if !(p.p_plus > CONTRAST_TOL) {
        return Err(Error::UndefinedContrast(p.p_plus));
    }
    Ok((p.p_plus - p.p_minus) / p.p_plus)
}

/// `C = (⟨J†J⟩ − Σ⟨σ_i⁺σ_i⁻⟩) / ⟨J†J⟩`.
pub fn cooperativity(rho: &DensityMatrix) -> Result<f64> {
    let space = rho.space();
    let j = collective_lowering(space);
    let collective = real_part(rho.expectation(&(&j.adjoint() * &j))?)?;
    if !(collective > DARK_COLLECTIVE_TOL) {
        return Err(Error::UndefinedCooperativity(collective));
    }
    let mut individual = 0.0;
    for i in 1..=space.n_emitters() {
        individual += real_part(rho.expectation(&emitter_excitation(space, i)?)?)?;
    }
    Ok((collective - individual) / collective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::dicke_ket;
    use crate::space::SpaceDescriptor;

    #[test]
    fn basis_examples() {
        let s = SpaceDescriptor::new(2, 2).unwrap();
        let gg = dicke_populations(&DensityMatrix::basis(s, 0, 0).unwrap()).unwrap();
        assert_eq!((gg.p_gg, gg.p_ee, gg.p_plus, gg.p_minus), (1.0, 0.0, 0.0, 0.0));
        let minus = DensityMatrix::pure(s, &dicke_ket(s, false, 0).unwrap()).unwrap();
        let p = dicke_populations(&minus).unwrap();
        assert!((p.p_minus - 1.0).abs() < 1e-15 && p.p_plus.abs() < 1e-15);
        let mixed = dicke_populations(&DensityMatrix::maximally_mixed(s)).unwrap();
        for v in [mixed.p_gg, mixed.p_ee, mixed.p_plus, mixed.p_minus] {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn contrast_examples() {
        let p = DickePopulations { p_gg: 0.5, p_ee: 0.0, p_plus: 0.25, p_minus: 0.25, residual: 0.0 };
        assert_eq!(population_contrast(&p).unwrap(), 0.0);
        let q = DickePopulations { p_minus: 0.0, ..p };
        assert_eq!(population_contrast(&q).unwrap(), 1.0);
        let r = DickePopulations { p_plus: 0.0, ..p };
        assert!(matches!(population_contrast(&r), Err(Error::UndefinedContrast(_))));
    }

    #[test]
    fn cooperativity_examples() {
        let s = SpaceDescriptor::new(2, 1).unwrap();
        let plus = DensityMatrix::pure(s, &dicke_ket(s, true, 0).unwrap()).unwrap();
        assert!((cooperativity(&plus).unwrap() - 0.5).abs() < 1e-14);
        let eg = DensityMatrix::basis(s, 0b10, 0).unwrap();
        assert_eq!(cooperativity(&eg).unwrap(), 0.0);
        let gg = DensityMatrix::basis(s, 0, 1).unwrap();
        assert!(matches!(cooperativity(&gg), Err(Error::UndefinedCooperativity(_))));
    }

    #[test]
    fn three_emitters_unsupported() {
        let s = SpaceDescriptor::new(3, 1).unwrap();
        let rho = DensityMatrix::basis(s, 0, 0).unwrap();
        assert!(matches!(dicke_populations(&rho), Err(Error::UnsupportedEmitterCount(3))));
    }
}
