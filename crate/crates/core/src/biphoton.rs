//! The hybrid OAM–polarization biphoton state, the isotropic noise channel
//! and the purity / quantum-contrast relations.
//!
//! Matrices are written in the ordered product basis
//! `{|l1,P1>, |l1,P2>, |l2,P1>, |l2,P2>}`: photon A's two-mode OAM subspace
//! is the outer factor and photon B's polarization the inner one.

use std::fmt;

use nalgebra::Vector4;
use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};
use crate::lgmodes::ModeSpec;
use crate::linalg::{self, Mat4};

/// Tolerance used when validating Hermiticity and unit trace.
pub const MATRIX_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-10;

/// Polarization labels for photon B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    /// The orthogonal partner on the Poincaré sphere.
    pub fn orthogonal(self) -> Polarization {
        use Polarization::*;
        match self {
            H => V,
            V => H,
            D => A,
            A => D,
            R => L,
            L => R,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Parameters of the pure state `(|l1>|P1> + e^{i delta}|l2>|P2>)/√2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridStateSpec {
    pub ell1: i32,
    pub ell2: i32,
    /// Relative phase in radians.
    pub delta: f64,
    pub pol_basis: (Polarization, Polarization),
    /// Beam waist shared by both LG modes.
    pub waist: f64,
}

impl HybridStateSpec {
    pub fn new(ell1: i32, ell2: i32) -> Self {
        HybridStateSpec {
            ell1,
            ell2,
            delta: 0.0,
            pol_basis: (Polarization::H, Polarization::V),
            waist: 1.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_waist(mut self, waist: f64) -> Self {
        self.waist = waist;
        self
    }

    pub fn with_pol_basis(mut self, p1: Polarization, p2: Polarization) -> Self {
        self.pol_basis = (p1, p2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.delta, "delta")?;
        ensure_finite(self.waist, "waist")?;
        if self.waist <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "waist",
                reason: format!("must be positive, got {}", self.waist),
            });
        }
        let (p1, p2) = self.pol_basis;
        if p1.orthogonal() != p2 {
            return Err(Error::InvalidParameter {
                name: "pol_basis",
                reason: format!("{p1} and {p2} are not orthogonal"),
            });
        }
        Ok(())
    }

    /// `Δl = l2 - l1`.
    pub fn delta_ell(&self) -> i32 {
        self.ell2 - self.ell1
    }

    /// Whether `|l1| != |l2|`, i.e. the texture can carry a nonzero Skyrmion number.
    pub fn is_topological(&self) -> bool {
        self.ell1.unsigned_abs() != self.ell2.unsigned_abs()
    }

    pub fn modes(&self) -> (ModeSpec, ModeSpec) {
        (
            ModeSpec::new(self.ell1).with_waist_unchecked(self.waist),
            ModeSpec::new(self.ell2).with_waist_unchecked(self.waist),
        )
    }

    /// State vector in the fixed product basis.
    pub fn state_vector(&self) -> Vector4<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Vector4::new(
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(s, self.delta),
        )
    }
}

/// A two-qubit density matrix on the OAM-subspace ⊗ polarization space.
///
/// Construction checks Hermiticity and unit trace. Positivity is not part of
/// the type: linear-inversion estimates may carry small negative eigenvalues,
/// so routines that need a physical state check [`DensityMatrix4::is_physical`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4 {
    matrix: Mat4,
    noise_weight: Option<f64>,
}

impl DensityMatrix4 {
    pub fn from_matrix(matrix: Mat4) -> Result<Self> {
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("density matrix"));
        }
        let dev = linalg::hermitian_deviation(&matrix);
        if dev > MATRIX_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace4(&matrix);
        if (tr.re - 1.0).abs() > MATRIX_TOL || tr.im.abs() > MATRIX_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        Ok(DensityMatrix4 {
            matrix,
            noise_weight: None,
        })
    }

    /// Hermitian part of `m` rescaled to unit trace.
    pub(crate) fn normalized(m: &Mat4) -> Result<Self> {
        let h = linalg::hermitian_part(m);
        let tr = linalg::trace4(&h).re;
        if !tr.is_finite() || tr.abs() < f64::MIN_POSITIVE {
            return Err(Error::BadTrace(tr));
        }
        Self::from_matrix(h / Complex64::new(tr, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix4 {
            matrix: Mat4::identity() * Complex64::new(0.25, 0.0),
            noise_weight: Some(0.0),
        }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// The isotropic-noise weight `p`, when this matrix came out of the channel.
    pub fn noise_weight(&self) -> Option<f64> {
        self.noise_weight
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> Vector4<f64> {
        linalg::hermitian_eigen(&self.matrix).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[3]
    }

    pub fn is_physical(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    pub(crate) fn ensure_physical(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            Err(Error::Unphysical(min))
        } else {
            Ok(())
        }
    }

    /// Frobenius norm of the difference.
    pub fn frobenius_distance(&self, other: &DensityMatrix4) -> f64 {
        linalg::frobenius(&(self.matrix - other.matrix))
    }

    /// Closest physical state in Frobenius norm: negative eigenvalues are
    /// clipped to zero and the trace restored.
    pub fn clipped(&self) -> DensityMatrix4 {
        let (values, vectors) = linalg::hermitian_eigen(&self.matrix);
        let m = linalg::spectral_map(&values, &vectors, |v| v.max(0.0));
        Self::normalized(&m).expect("clipping keeps a positive trace")
    }
}

/// `|Ψ><Ψ|` for the hybrid state.
pub fn pure_state(spec: &HybridStateSpec) -> Result<DensityMatrix4> {
    spec.validate()?;
    let psi = spec.state_vector();
    let mut rho = DensityMatrix4::normalized(&(psi * psi.adjoint()))?;
    rho.noise_weight = Some(1.0);
    Ok(rho)
}

/// The isotropic channel `p |Ψ><Ψ| + (1-p)/4 · 1`.
pub fn apply_isotropic_noise(rho_pure: &DensityMatrix4, p: f64) -> Result<DensityMatrix4> {
    ensure_finite(p, "p")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("must lie in [0, 1], got {p}"),
        });
    }
    let gamma = purity(rho_pure);
    if (gamma - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure(gamma));
    }
    let m = rho_pure.matrix * Complex64::new(p, 0.0)
        + Mat4::identity() * Complex64::new((1.0 - p) / 4.0, 0.0);
    Ok(DensityMatrix4 {
        matrix: m,
        noise_weight: Some(p),
    })
}

/// `Tr(ρ²)`. Hermiticity is guaranteed by [`DensityMatrix4`] construction.
pub fn purity(rho: &DensityMatrix4) -> f64 {
    linalg::trace_product(&rho.matrix, &rho.matrix).re
}

/// Purity of a raw matrix, rejecting non-Hermitian input.
pub fn matrix_purity(m: &Mat4) -> Result<f64> {
    let dev = linalg::hermitian_deviation(m);
    if dev > MATRIX_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(linalg::trace_product(m, m).re)
}

/// Closed form `γ = p² + (1 - p²)/d²` of the channel output purity.
pub fn purity_from_weight(p: f64, d: u32) -> f64 {
    let d2 = f64::from(d * d);
    p * p + (1.0 - p * p) / d2
}

/// Inverse of [`purity_from_weight`] on `p ∈ [0, 1]`: `p = √((d²γ - 1)/(d² - 1))`.
pub fn weight_from_purity(gamma: f64, d: u32) -> Result<f64> {
    ensure_finite(gamma, "purity")?;
    let d2 = f64::from(d * d);
    if d < 2 || !(1.0 / d2..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter {
            name: "purity",
            reason: format!("must lie in [1/d², 1] with d ≥ 2, got {gamma}"),
        });
    }
    Ok(((d2 * gamma - 1.0) / (d2 - 1.0)).sqrt())
}

fn check_contrast(qc: f64, d: u32) -> Result<()> {
    ensure_finite(qc, "Qc")?;
    if qc < 1.0 {
        return Err(Error::ContrastBelowOne(qc));
    }
    if d == 0 {
        return Err(Error::InvalidParameter {
            name: "d",
            reason: "dimension must be positive".into(),
        });
    }
    Ok(())
}

/// `p = (Qc - 1) / (Qc - 1 + d)`.
pub fn contrast_to_p(qc: f64, d: u32) -> Result<f64> {
    check_contrast(qc, d)?;
    let excess = qc - 1.0;
    Ok(excess / (excess + f64::from(d)))
}

/// Inverse of [`contrast_to_p`]: `Qc = (1 - p + p d) / (1 - p)`; `p = 1` maps to `+∞`.
pub fn p_to_contrast(p: f64, d: u32) -> Result<f64> {
    ensure_finite(p, "p")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("must lie in [0, 1], got {p}"),
        });
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 - p + p * f64::from(d)) / (1.0 - p))
}

/// Purity as a function of quantum contrast,
/// `γ = (d(Qc² - 2Qc + 2) + 2(Qc - 1)) / (d (d + Qc - 1)²)`.
pub fn contrast_to_purity(qc: f64, d: u32) -> Result<f64> {
    check_contrast(qc, d)?;
    let d = f64::from(d);
    Ok((d * (qc * qc - 2.0 * qc + 2.0) + 2.0 * (qc - 1.0)) / (d * (d + qc - 1.0).powi(2)))
}

/// Two-qubit form `γ = ¼ [3((Qc - 1)/(Qc + 1))² + 1]`.
pub fn contrast_to_purity_qubit(qc: f64) -> Result<f64> {
    check_contrast(qc, 2)?;
    let r = (qc - 1.0) / (qc + 1.0);
    Ok(0.25 * (3.0 * r * r + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn bell_projector_entries() {
        let rho = pure_state(&HybridStateSpec::new(0, 1)).unwrap();
        for (i, j) in [(0, 0), (3, 3), (0, 3), (3, 0)] {
            assert!((rho.get(i, j) - c(0.5)).norm() < 1e-15);
        }
        let others: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| !matches!((i, j), (0, 0) | (3, 3) | (0, 3) | (3, 0)))
            .map(|(i, j)| rho.get(i, j).norm())
            .sum();
        assert_eq!(others, 0.0);
    }

    #[test]
    fn relative_phase_pi_flips_coherence() {
        let rho = pure_state(&HybridStateSpec::new(0, 3).with_delta(PI)).unwrap();
        assert!((rho.get(0, 3) - c(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn pure_states_have_unit_purity() {
        for (l1, l2, d) in [(0, 1, 0.0), (2, -3, 1.3), (-1, 4, 5.9)] {
            let rho = pure_state(&HybridStateSpec::new(l1, l2).with_delta(d)).unwrap();
            assert!((purity(&rho) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn non_orthogonal_basis_rejected() {
        let spec = HybridStateSpec::new(0, 1).with_pol_basis(Polarization::H, Polarization::D);
        assert!(matches!(
            pure_state(&spec),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn channel_endpoints() {
        let rho = pure_state(&HybridStateSpec::new(0, 1)).unwrap();
        let same = apply_isotropic_noise(&rho, 1.0).unwrap();
        assert!(same.frobenius_distance(&rho) < 1e-15);
        let mixed = apply_isotropic_noise(&rho, 0.0).unwrap();
        assert!(mixed.frobenius_distance(&DensityMatrix4::maximally_mixed()) < 1e-15);
        assert_eq!(mixed.noise_weight(), Some(0.0));
    }

    #[test]
    fn channel_rejects_bad_weight_and_mixed_input() {
        let rho = pure_state(&HybridStateSpec::new(0, 1)).unwrap();
        assert!(apply_isotropic_noise(&rho, 1.2).is_err());
        assert!(apply_isotropic_noise(&rho, -0.1).is_err());
        let mixed = apply_isotropic_noise(&rho, 0.5).unwrap();
        assert!(matches!(
            apply_isotropic_noise(&mixed, 0.5),
            Err(Error::NotPure(_))
        ));
    }

    #[test]
    fn purity_at_half_and_point_eight() {
        let rho = pure_state(&HybridStateSpec::new(0, 3)).unwrap();
        // closed form evaluated by hand: 0.25 + 0.75/4, 0.64 + 0.36/4
        let half = apply_isotropic_noise(&rho, 0.5).unwrap();
        assert!((purity(&half) - 0.4375).abs() < 1e-12);
        let p8 = apply_isotropic_noise(&rho, 0.8).unwrap();
        assert!((purity(&p8) - 0.73).abs() < 1e-12);
        assert!((purity(&DensityMatrix4::maximally_mixed()) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn channel_spectrum() {
        let rho = pure_state(&HybridStateSpec::new(1, -2).with_delta(0.7)).unwrap();
        let p = 0.37;
        let ev = apply_isotropic_noise(&rho, p).unwrap().eigenvalues();
        let lo = (1.0 - p) / 4.0;
        let expected = [p + lo, lo, lo, lo];
        for i in 0..4 {
            assert!((ev[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = Mat4::identity() * c(0.25);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            DensityMatrix4::from_matrix(m),
            Err(Error::NotHermitian(_))
        ));
        assert!(matches!(matrix_purity(&m), Err(Error::NotHermitian(_))));
        let bad_trace = Mat4::identity() * c(0.3);
        assert!(matches!(
            DensityMatrix4::from_matrix(bad_trace),
            Err(Error::BadTrace(_))
        ));
    }

    #[test]
    fn weight_purity_round_trip() {
        for p in [0.0, 0.3, 0.856, 1.0] {
            let g = purity_from_weight(p, 2);
            assert!((weight_from_purity(g, 2).unwrap() - p).abs() < 1e-12);
        }
        assert!(weight_from_purity(0.2, 2).is_err());
        assert!(weight_from_purity(1.01, 2).is_err());
    }

    #[test]
    fn contrast_mappings() {
        assert_eq!(contrast_to_p(1.0, 2).unwrap(), 0.0);
        assert!((contrast_to_p(1e9, 2).unwrap() - 1.0).abs() < 1e-8);
        let p = contrast_to_p(3.0, 2).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((p_to_contrast(p, 2).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            contrast_to_p(0.9, 2),
            Err(Error::ContrastBelowOne(_))
        ));
        assert!(contrast_to_purity(0.5, 2).is_err());
        assert_eq!(p_to_contrast(1.0, 2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn purity_from_contrast_values() {
        assert!((contrast_to_purity(1.0, 2).unwrap() - 0.25).abs() < 1e-15);
        // Qc = 3 -> p = 0.5 -> γ = 0.4375 through the weight route
        let via_p = purity_from_weight(contrast_to_p(3.0, 2).unwrap(), 2);
        assert!((contrast_to_purity(3.0, 2).unwrap() - via_p).abs() < 1e-14);
        assert!((via_p - 0.4375).abs() < 1e-15);
        assert!(contrast_to_purity(32.3, 2).unwrap() >= 0.79);
    }
}
