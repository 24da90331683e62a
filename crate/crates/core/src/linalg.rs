//! Small fixed-size complex matrix helpers shared by the state and
//! tomography code.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Pauli matrix `sigma_i` for `i` in `0..=3` (`0` is the identity).
pub fn pauli(i: usize) -> Mat2 {
    match i {
        0 => Mat2::new(ONE, ZERO, ZERO, ONE),
        1 => Mat2::new(ZERO, ONE, ONE, ZERO),
        2 => Mat2::new(ZERO, -IM, IM, ZERO),
        3 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {i} out of range"),
    }
}

/// Kronecker product `a ⊗ b`, with `a` acting on the outer (slow) index.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn trace4(m: &Mat4) -> Complex64 {
    m.diagonal().sum()
}

pub fn trace2(m: &Mat2) -> Complex64 {
    m[(0, 0)] + m[(1, 1)]
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &Mat4, b: &Mat4) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entrywise deviation `|m - m^†|`.
pub fn hermitian_deviation(m: &Mat4) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        for j in i..4 {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn hermitian_part(m: &Mat4) -> Mat4 {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian 4×4 matrix, eigenvalues sorted in
/// decreasing order with the matching eigenvector columns.
pub fn hermitian_eigen(m: &Mat4) -> (Vector4<f64>, Mat4) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = Vector4::from_fn(|i, _| eig.eigenvalues[order[i]]);
    let vectors = Mat4::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Reassemble `V f(Λ) V^†` from an eigen-decomposition.
pub fn spectral_map(values: &Vector4<f64>, vectors: &Mat4, f: impl Fn(f64) -> f64) -> Mat4 {
    let diag = Mat4::from_diagonal(&values.map(|v| Complex64::new(f(v), 0.0)));
    vectors * diag * vectors.adjoint()
}

/// Eigenvalues this far below the largest one are round-off.
pub(crate) const SPECTRAL_FLOOR: f64 = 1e-14;

/// Zero out eigenvalues that are negative or below round-off level.
pub(crate) fn clip_spectrum(values: &Vector4<f64>) -> Vector4<f64> {
    let cut = SPECTRAL_FLOOR * values.max().max(0.0);
    values.map(|v| if v > cut { v } else { 0.0 })
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// eigenvalues at round-off level are taken as zero.
pub fn psd_sqrt(m: &Mat4) -> Mat4 {
    let (values, vectors) = hermitian_eigen(m);
    spectral_map(&clip_spectrum(&values), &vectors, f64::sqrt)
}

pub fn frobenius(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_square_to_identity() {
        for i in 0..4 {
            let s = pauli(i);
            assert!((s * s - pauli(0)).norm() < 1e-15);
        }
    }

    #[test]
    fn kron_orders_outer_factor_first() {
        let k = kron(&pauli(3), &pauli(0));
        let diag: Vec<f64> = (0..4).map(|i| k[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Mat4::from_fn(|r, c| {
            Complex64::new((r + 2 * c) as f64 * 0.1, (r as f64 - c as f64) * 0.05)
        });
        let m = a * a.adjoint();
        let s = psd_sqrt(&m);
        assert!((s * s - m).norm() < 1e-12);
    }
}
