//! Skyrmion density and Skyrmion number of a unit-vector texture.
//!
//! The density `Σ = S · (∂x S × ∂y S)` is differenced on the grid and
//! integrated with the trapezoid rule. Textures whose tails decay like a
//! power law leave part of the sphere outside any finite window; that part is
//! recovered from the boundary loop as the solid angle it encloses around
//! the far-field direction.

use std::f64::consts::PI;

use ndarray::Array2;
use rayon::prelude::*;

use crate::biphoton::{apply_isotropic_noise, pure_state, DensityMatrix4, HybridStateSpec};
use crate::error::{Error, Result};
use crate::lgmodes::{coeff_field, GridSpec};
use crate::stokesfield::{normalize_stokes, stokes_field, UnitVectorField, DEFAULT_DEGENERACY_EPS};

/// Finite-difference scheme for `∂x`, `∂y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Second-order central differences, one-sided on the edges.
    Central2,
    /// Sixth-order central differences, dropping to fourth and second order
    /// near the edges and to second-order one-sided on them.
    #[default]
    Central6,
}

/// Options for [`skyrmion_number_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkyrmionOptions {
    pub stencil: Stencil,
    /// Add the solid angle swept outside the grid window.
    pub exterior_correction: bool,
}

impl Default for SkyrmionOptions {
    fn default() -> Self {
        SkyrmionOptions {
            stencil: Stencil::Central6,
            exterior_correction: true,
        }
    }
}

/// Outcome of a Skyrmion-number evaluation.
#[derive(Debug, Clone)]
pub struct SkyrmionResult {
    /// `raw_integral + exterior`.
    pub n: f64,
    /// `(1/4π) ∫ Σ dx dy` over the grid window.
    pub raw_integral: f64,
    /// Contribution from outside the window (0 when the correction is off).
    pub exterior: f64,
    pub density: Array2<f64>,
    /// Nearest integer to `n`; advisory only.
    pub rounded: i64,
    /// `|n - rounded|`.
    pub residual: f64,
    pub samples: usize,
    pub masked_fraction: f64,
    /// Normalized mean of the boundary vectors.
    pub far_field: Option<[f64; 3]>,
    /// Largest angle (radians) between a boundary vector and `far_field`.
    pub boundary_spread: f64,
}

impl SkyrmionResult {
    fn collapsed(samples: usize) -> Self {
        SkyrmionResult {
            n: 0.0,
            raw_integral: 0.0,
            exterior: 0.0,
            density: Array2::zeros((samples, samples)),
            rounded: 0,
            residual: 0.0,
            samples,
            masked_fraction: 1.0,
            far_field: None,
            boundary_spread: 0.0,
        }
    }
}

/// Offsets and weights (in units of `1/h`) of the derivative at index `i`
/// on an axis of length `n`.
fn stencil_at(stencil: Stencil, i: usize, n: usize) -> &'static [(isize, f64)] {
    const FWD: [(isize, f64); 3] = [(0, -1.5), (1, 2.0), (2, -0.5)];
    const BWD: [(isize, f64); 3] = [(0, 1.5), (-1, -2.0), (-2, 0.5)];
    const C2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
    const C4: [(isize, f64); 4] = [
        (-2, 1.0 / 12.0),
        (-1, -8.0 / 12.0),
        (1, 8.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    const C6: [(isize, f64); 6] = [
        (-3, -1.0 / 60.0),
        (-2, 9.0 / 60.0),
        (-1, -45.0 / 60.0),
        (1, 45.0 / 60.0),
        (2, -9.0 / 60.0),
        (3, 1.0 / 60.0),
    ];
    if i == 0 {
        return &FWD;
    }
    if i == n - 1 {
        return &BWD;
    }
    let edge = i.min(n - 1 - i);
    match (stencil, edge) {
        (Stencil::Central2, _) | (_, 1) => &C2,
        (Stencil::Central6, 2) => &C4,
        (Stencil::Central6, _) => &C6,
    }
}

fn check_shape(field: &UnitVectorField, grid: &GridSpec) -> Result<()> {
    let n = grid.samples;
    if field.vectors.dim() != (n, n) || field.grid().samples != n {
        return Err(Error::GridMismatch(format!(
            "field is {:?}, grid is {n}x{n}",
            field.vectors.dim()
        )));
    }
    Ok(())
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn density_row(field: &UnitVectorField, stencil: Stencil, h: f64, row: usize) -> Vec<f64> {
    let n = field.vectors.ncols();
    let v = &field.vectors;
    let m = &field.mask;
    (0..n)
        .map(|col| {
            if m[(row, col)] {
                return 0.0;
            }
            let sx = stencil_at(stencil, col, n);
            let sy = stencil_at(stencil, row, n);
            let mut dx = [0.0; 3];
            for &(o, w) in sx {
                let c = (col as isize + o) as usize;
                if m[(row, c)] {
                    return 0.0;
                }
                for k in 0..3 {
                    dx[k] += w * v[(row, c)][k];
                }
            }
            let mut dy = [0.0; 3];
            for &(o, w) in sy {
                let r = (row as isize + o) as usize;
                if m[(r, col)] {
                    return 0.0;
                }
                for k in 0..3 {
                    dy[k] += w * v[(r, col)][k];
                }
            }
            dot(v[(row, col)], cross(dx, dy)) / (h * h)
        })
        .collect()
}

/// `Σz(x, y) = ε_pqr S_p ∂x S_q ∂y S_r` with the default stencil.
pub fn skyrmion_density(field: &UnitVectorField, grid: &GridSpec) -> Result<Array2<f64>> {
    skyrmion_density_with(field, grid, Stencil::default())
}

/// [`skyrmion_density`] with an explicit stencil. Masked points, and points
/// whose stencil touches a masked neighbour, get density 0.
pub fn skyrmion_density_with(
    field: &UnitVectorField,
    grid: &GridSpec,
    stencil: Stencil,
) -> Result<Array2<f64>> {
    check_shape(field, grid)?;
    let n = grid.samples;
    let h = grid.spacing();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|row| density_row(field, stencil, h, row))
        .collect();
    Ok(Array2::from_shape_vec((n, n), rows.into_iter().flatten().collect()).expect("n*n values"))
}

/// Signed solid angle of the spherical triangle `(a, b, c)`.
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    2.0 * dot(a, cross(b, c)).atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

/// Unmasked boundary vectors, counter-clockwise in the `(x, y)` plane.
fn boundary_loop(field: &UnitVectorField) -> Vec<[f64; 3]> {
    let n = field.vectors.nrows();
    let last = n - 1;
    let idx = (0..last)
        .map(|j| (0, j))
        .chain((0..last).map(|i| (i, last)))
        .chain((1..=last).rev().map(|j| (last, j)))
        .chain((1..=last).rev().map(|i| (i, 0)));
    idx.filter_map(|(r, c)| field.get(r, c)).collect()
}

struct Exterior {
    n: f64,
    far_field: Option<[f64; 3]>,
    spread: f64,
}

fn exterior_cap(field: &UnitVectorField) -> Exterior {
    let gamma = boundary_loop(field);
    let mut mean = [0.0; 3];
    for g in &gamma {
        for k in 0..3 {
            mean[k] += g[k];
        }
    }
    let norm = dot(mean, mean).sqrt();
    if gamma.len() < 3 || norm == 0.0 {
        return Exterior {
            n: 0.0,
            far_field: None,
            spread: 0.0,
        };
    }
    let m = mean.map(|c| c / norm);
    let spread = gamma
        .iter()
        .map(|g| dot(m, *g).clamp(-1.0, 1.0).acos())
        .fold(0.0, f64::max);
    let omega: f64 = (0..gamma.len())
        .map(|k| solid_angle(m, gamma[k], gamma[(k + 1) % gamma.len()]))
        .sum();
    Exterior {
        n: -omega / (4.0 * PI),
        far_field: Some(m),
        spread,
    }
}

/// `N = (1/4π) ∫ Σz dx dy` with default options.
pub fn skyrmion_number(field: &UnitVectorField, grid: &GridSpec) -> Result<SkyrmionResult> {
    skyrmion_number_with(field, grid, &SkyrmionOptions::default())
}

pub fn skyrmion_number_with(
    field: &UnitVectorField,
    grid: &GridSpec,
    options: &SkyrmionOptions,
) -> Result<SkyrmionResult> {
    check_shape(field, grid)?;
    let n = grid.samples;
    if field.fully_degenerate || field.mask.iter().all(|&m| m) {
        return Ok(SkyrmionResult::collapsed(n));
    }
    let density = skyrmion_density_with(field, grid, options.stencil)?;
    let h = grid.spacing();
    let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for row in 0..n {
        let mut row_sum = 0.0;
        for col in 0..n {
            row_sum += weight(col) * density[(row, col)];
        }
        sum += weight(row) * row_sum;
    }
    let raw_integral = sum * h * h / (4.0 * PI);
    let ext = if options.exterior_correction {
        exterior_cap(field)
    } else {
        Exterior {
            n: 0.0,
            far_field: None,
            spread: 0.0,
        }
    };
    let total = raw_integral + ext.n;
    let rounded = total.round() as i64;
    Ok(SkyrmionResult {
        n: total,
        raw_integral,
        exterior: ext.n,
        density,
        rounded,
        residual: (total - rounded as f64).abs(),
        samples: n,
        masked_fraction: field.masked_fraction(),
        far_field: ext.far_field,
        boundary_spread: ext.spread,
    })
}

/// Closed-form Skyrmion number `sign(|l2| - |l1|)·(l2 - l1)` in the Stokes
/// convention of this crate (`P1` on the `+z` pole).
pub fn skyrmion_number_analytic(spec: &HybridStateSpec) -> Result<i32> {
    let (k1, k2) = (spec.ell1.unsigned_abs(), spec.ell2.unsigned_abs());
    if k1 == k2 {
        return Err(Error::TrivialTopology(k1));
    }
    let m = if k2 > k1 { 1 } else { -1 };
    Ok(m * spec.delta_ell())
}

/// Normalized Stokes texture of `rho` for the modes of `spec`.
pub fn texture(
    rho: &DensityMatrix4,
    spec: &HybridStateSpec,
    grid: &GridSpec,
) -> Result<UnitVectorField> {
    let coeffs = coeff_field(spec, grid)?;
    let field = stokes_field(rho, &coeffs, grid)?;
    normalize_stokes(&field, DEFAULT_DEGENERACY_EPS)
}

/// Skyrmion number of the channel output at weight `p`.
pub fn skyrmion_number_at(
    spec: &HybridStateSpec,
    p: f64,
    grid: &GridSpec,
) -> Result<SkyrmionResult> {
    let rho = apply_isotropic_noise(&pure_state(spec)?, p)?;
    skyrmion_number(&texture(&rho, spec, grid)?, grid)
}

/// One line of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub samples: usize,
    pub n: f64,
    pub residual: f64,
}

/// `N` at each resolution on a window of fixed half-width.
pub fn convergence_scan(
    spec: &HybridStateSpec,
    p: f64,
    half_width: f64,
    resolutions: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if resolutions.is_empty() {
        return Err(Error::InvalidParameter {
            name: "resolutions",
            reason: "at least one resolution is required".into(),
        });
    }
    resolutions
        .iter()
        .map(|&samples| {
            let grid = GridSpec::new(half_width, samples)?;
            let r = skyrmion_number_at(spec, p, &grid)?;
            Ok(ConvergenceRow {
                samples,
                n: r.n,
                residual: r.residual,
            })
        })
        .collect()
}

/// Whether residuals strictly decrease with resolution; `None` for fewer than two rows.
pub fn residuals_decreasing(rows: &[ConvergenceRow]) -> Option<bool> {
    if rows.len() < 2 {
        return None;
    }
    Some(rows.windows(2).all(|w| w[1].residual < w[0].residual))
}
