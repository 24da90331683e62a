use crate::biphoton::{pure_state, purity, DensityMatrix4, HybridStateSpec};
use crate::error::Result;
use crate::linalg::{clip_spectrum, hermitian_eigen, kron, pauli, psd_sqrt};

/// Wootters concurrence `max(0, λ1 - λ2 - λ3 - λ4)`, with `λ_i` the
/// decreasing square roots of the eigenvalues of `ρ ρ̃`,
/// `ρ̃ = (σy ⊗ σy) ρ* (σy ⊗ σy)`.
pub fn concurrence(rho: &DensityMatrix4) -> Result<f64> {
    rho.ensure_physical()?;
    let yy = kron(&pauli(2), &pauli(2));
    let m = rho.matrix();
    let tilde = yy * m.conjugate() * yy;
    // ρρ̃ shares its spectrum with the Hermitian √ρ ρ̃ √ρ
    let s = psd_sqrt(m);
    let (values, _) = hermitian_eigen(&(s * tilde * s));
    let l = clip_spectrum(&values).map(f64::sqrt);
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// Uhlmann fidelity `(Tr √(√ρ_T ρ √ρ_T))²`.
pub fn fidelity(rho: &DensityMatrix4, target: &DensityMatrix4) -> Result<f64> {
    rho.ensure_physical()?;
    target.ensure_physical()?;
    let s = psd_sqrt(target.matrix());
    let (values, _) = hermitian_eigen(&(s * rho.matrix() * s));
    let t: f64 = clip_spectrum(&values).map(f64::sqrt).sum();
    Ok((t * t).clamp(0.0, 1.0))
}

/// Purity, concurrence and fidelity of a state against a pure target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    pub purity: f64,
    pub concurrence: f64,
    pub fidelity: f64,
    pub against_target: HybridStateSpec,
}

pub fn witness_report(rho: &DensityMatrix4, target: &HybridStateSpec) -> Result<WitnessReport> {
    Ok(WitnessReport {
        purity: purity(rho),
        concurrence: concurrence(rho)?,
        fidelity: fidelity(rho, &pure_state(target)?)?,
        against_target: *target,
    })
}
