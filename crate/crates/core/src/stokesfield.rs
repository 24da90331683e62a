//! Position-conditioned polarization state of photon B and its quantum
//! Stokes fields.
//!
//! Pauli convention: `σ1 = σx`, `σ2 = σy`, `σ3 = σz` in the `(P1, P2)` basis,
//! with `P1` the `+z` eigenstate.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::biphoton::DensityMatrix4;
use crate::error::{Error, Result};
use crate::lgmodes::{CoeffField, GridSpec};
use crate::linalg::{pauli, trace2, Mat2};

/// Unnormalized Stokes vectors shorter than this are treated as degenerate.
pub const DEFAULT_DEGENERACY_EPS: f64 = 1e-6;

/// `⟨r|ρ|r⟩` on photon B from the spatial overlaps `u = (<r|l1>, <r|l2>)`,
/// scaled so that a pointwise-normalized `u` gives unit trace for the
/// channel outputs.
pub fn conditional_state_from_overlaps(rho: &DensityMatrix4, u: [Complex64; 2]) -> Mat2 {
    let m = rho.matrix();
    Mat2::from_fn(|s, t| {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..2 {
            for k in 0..2 {
                acc += u[j] * u[k].conj() * m[(2 * j + s, 2 * k + t)];
            }
        }
        acc * 2.0
    })
}

/// Reduced state of photon B conditioned on photon A being found at grid
/// point `(row, col)`.
pub fn conditional_state(
    rho: &DensityMatrix4,
    coeffs: &CoeffField,
    point: (usize, usize),
) -> Result<Mat2> {
    let (row, col) = point;
    let (n_rows, n_cols) = coeffs.a.dim();
    if row >= n_rows || col >= n_cols {
        return Err(Error::GridMismatch(format!(
            "point ({row}, {col}) outside a {n_rows}x{n_cols} grid"
        )));
    }
    let (u1, u2) = coeffs
        .mode_overlaps(row, col)
        .ok_or(Error::MaskedPoint { row, col })?;
    Ok(conditional_state_from_overlaps(rho, [u1, u2]))
}

/// `(S0, S1, S2, S3)` of a 2×2 polarization state.
pub fn stokes_vector(rho_b: &Mat2) -> [f64; 4] {
    let mut s = [0.0; 4];
    for (i, v) in s.iter_mut().enumerate() {
        *v = trace2(&(pauli(i) * rho_b)).re;
    }
    s
}

/// Grid-sampled quantum Stokes parameters.
#[derive(Debug, Clone)]
pub struct StokesField {
    pub s0: Array2<f64>,
    pub s1: Array2<f64>,
    pub s2: Array2<f64>,
    pub s3: Array2<f64>,
    /// `true` where the coefficients were undefined.
    pub mask: Array2<bool>,
    pub noise_weight: Option<f64>,
    grid: GridSpec,
}

impl StokesField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `(S1, S2, S3)` at a grid point.
    pub fn vector(&self, row: usize, col: usize) -> [f64; 3] {
        [
            self.s1[(row, col)],
            self.s2[(row, col)],
            self.s3[(row, col)],
        ]
    }

    /// Largest `|S|² - S0²` over unmasked points (non-positive for physical input).
    pub fn max_cone_excess(&self) -> f64 {
        let n = self.grid.samples;
        let mut worst = f64::NEG_INFINITY;
        for row in 0..n {
            for col in 0..n {
                if !self.mask[(row, col)] {
                    let v = self.vector(row, col);
                    let s0 = self.s0[(row, col)];
                    worst = worst.max(norm3(v).powi(2) - s0 * s0);
                }
            }
        }
        worst
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Stokes parameters of the conditional state at every grid point.
pub fn stokes_field(
    rho: &DensityMatrix4,
    coeffs: &CoeffField,
    grid: &GridSpec,
) -> Result<StokesField> {
    if coeffs.grid() != grid {
        return Err(Error::GridMismatch(format!(
            "coefficients sampled on {:?}, Stokes field requested on {:?}",
            coeffs.grid(),
            grid
        )));
    }
    let n = grid.samples;
    let rows: Vec<Vec<Option<[f64; 4]>>> = (0..n)
        .into_par_iter()
        .map(|row| {
            (0..n)
                .map(|col| {
                    coeffs.mode_overlaps(row, col).map(|(u1, u2)| {
                        stokes_vector(&conditional_state_from_overlaps(rho, [u1, u2]))
                    })
                })
                .collect()
        })
        .collect();

    let mut s = [(); 4].map(|_| Array2::<f64>::zeros((n, n)));
    let mut mask = Array2::from_elem((n, n), false);
    for (row, values) in rows.into_iter().enumerate() {
        for (col, v) in values.into_iter().enumerate() {
            match v {
                Some(v) => {
                    for i in 0..4 {
                        s[i][(row, col)] = v[i];
                    }
                }
                None => mask[(row, col)] = true,
            }
        }
    }
    let [s0, s1, s2, s3] = s;
    Ok(StokesField {
        s0,
        s1,
        s2,
        s3,
        mask,
        noise_weight: rho.noise_weight(),
        grid: *grid,
    })
}

/// One of the three Stokes axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StokesAxis {
    S1,
    S2,
    S3,
}

impl StokesAxis {
    pub const ALL: [StokesAxis; 3] = [StokesAxis::S1, StokesAxis::S2, StokesAxis::S3];

    /// Pauli index `1..=3`.
    pub fn index(self) -> usize {
        match self {
            StokesAxis::S1 => 1,
            StokesAxis::S2 => 2,
            StokesAxis::S3 => 3,
        }
    }
}

impl TryFrom<usize> for StokesAxis {
    type Error = Error;

    fn try_from(i: usize) -> Result<Self> {
        match i {
            1 => Ok(StokesAxis::S1),
            2 => Ok(StokesAxis::S2),
            3 => Ok(StokesAxis::S3),
            _ => Err(Error::InvalidParameter {
                name: "axis",
                reason: format!("Stokes axis must be 1, 2 or 3, got {i}"),
            }),
        }
    }
}

impl fmt::Display for StokesAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index())
    }
}

/// Intensities behind the two eigenprojectors of one Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionPair {
    pub plus: f64,
    pub minus: f64,
    /// The part of each intensity carried by the identity component of the
    /// conditional state, equal for both projections.
    pub noise_share: f64,
}

impl ProjectionPair {
    pub fn difference(&self) -> f64 {
        self.plus - self.minus
    }
}

/// `Tr(P±_i ⟨r|ρ|r⟩)` with `P±_i = (1 ± σ_i)/2`, plus their common noise share.
pub fn projection_pair(
    rho: &DensityMatrix4,
    coeffs: &CoeffField,
    point: (usize, usize),
    axis: StokesAxis,
) -> Result<ProjectionPair> {
    let rho_b = conditional_state(rho, coeffs, point)?;
    let sigma = pauli(axis.index());
    let id = pauli(0);
    let half = Complex64::new(0.5, 0.0);
    let plus = trace2(&((id + sigma) * half * rho_b)).re;
    let minus = trace2(&((id - sigma) * half * rho_b)).re;

    // ρ_B = λ_min·1 + (λ_max - λ_min)|v><v|; λ_min lands on both projectors
    let s = stokes_vector(&rho_b);
    let noise_share = 0.5 * (s[0] - norm3([s[1], s[2], s[3]]));

    let pair = ProjectionPair {
        plus,
        minus,
        noise_share,
    };
    debug_assert!((pair.difference() - s[axis.index()]).abs() < 1e-12);
    Ok(pair)
}

/// Stokes vectors mapped onto the unit sphere.
#[derive(Debug, Clone)]
pub struct UnitVectorField {
    pub vectors: Array2<[f64; 3]>,
    /// `true` at degenerate or undefined points.
    pub mask: Array2<bool>,
    /// Set when every point is degenerate (the texture has collapsed).
    pub fully_degenerate: bool,
    grid: GridSpec,
}

impl UnitVectorField {
    /// Field sampled from `f(x, y)`; vectors are normalized, zero vectors masked.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let n = grid.samples;
        let mut vectors = Array2::from_elem((n, n), [0.0; 3]);
        let mut mask = Array2::from_elem((n, n), false);
        for row in 0..n {
            for col in 0..n {
                let (x, y) = grid.point(row, col);
                let v = f(x, y);
                let norm = norm3(v);
                if norm > 0.0 && norm.is_finite() {
                    vectors[(row, col)] = v.map(|c| c / norm);
                } else {
                    mask[(row, col)] = true;
                }
            }
        }
        let fully_degenerate = mask.iter().all(|&m| m);
        UnitVectorField {
            vectors,
            mask,
            fully_degenerate,
            grid: *grid,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn get(&self, row: usize, col: usize) -> Option<[f64; 3]> {
        (!self.mask[(row, col)]).then(|| self.vectors[(row, col)])
    }

    pub fn masked_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    /// Apply a 3×3 matrix (row-major) to every vector.
    pub fn rotated(&self, r: [[f64; 3]; 3]) -> Self {
        let mut out = self.clone();
        out.vectors
            .mapv_inplace(|v| [0, 1, 2].map(|i| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2]));
        out
    }

    /// Largest pointwise Euclidean distance over points unmasked in both.
    pub fn max_distance(&self, other: &UnitVectorField) -> f64 {
        self.vectors
            .iter()
            .zip(other.vectors.iter())
            .zip(self.mask.iter().zip(other.mask.iter()))
            .filter(|(_, (&a, &b))| !a && !b)
            .map(|((u, v), _)| norm3([u[0] - v[0], u[1] - v[1], u[2] - v[2]]))
            .fold(0.0, f64::max)
    }
}

/// Divide each Stokes vector by its length; points shorter than `eps` are masked.
pub fn normalize_stokes(field: &StokesField, eps: f64) -> Result<UnitVectorField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be positive and finite, got {eps}"),
        });
    }
    let n = field.grid.samples;
    let mut vectors = Array2::from_elem((n, n), [0.0; 3]);
    let mut mask = field.mask.clone();
    for row in 0..n {
        for col in 0..n {
            if mask[(row, col)] {
                continue;
            }
            let v = field.vector(row, col);
            let norm = norm3(v);
            if norm < eps {
                mask[(row, col)] = true;
            } else {
                vectors[(row, col)] = v.map(|c| c / norm);
            }
        }
    }
    let fully_degenerate = mask.iter().all(|&m| m);
    Ok(UnitVectorField {
        vectors,
        mask,
        fully_degenerate,
        grid: field.grid,
    })
}
