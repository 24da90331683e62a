//! Laguerre–Gaussian mode amplitudes and the position-basis coefficients
//! `a(r)`, `b(r)` of the hybrid state on a square grid.
//!
//! All lengths share one unit; the waist defaults to 1 so grids are
//! naturally expressed in units of `w`.

use std::f64::consts::{PI, SQRT_2};

use ndarray::Array2;
use num_complex::Complex64;

use crate::biphoton::HybridStateSpec;
use crate::error::{ensure_finite, Error, Result};

/// One LG mode: azimuthal charge, waist and radial index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub ell: i32,
    pub waist: f64,
    pub radial_index: u32,
}

impl ModeSpec {
    pub fn new(ell: i32) -> Self {
        ModeSpec {
            ell,
            waist: 1.0,
            radial_index: 0,
        }
    }

    pub fn with_waist(self, waist: f64) -> Result<Self> {
        let m = self.with_waist_unchecked(waist);
        m.validate()?;
        Ok(m)
    }

    pub(crate) fn with_waist_unchecked(mut self, waist: f64) -> Self {
        self.waist = waist;
        self
    }

    pub fn with_radial_index(mut self, radial_index: u32) -> Self {
        self.radial_index = radial_index;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.waist, "waist")?;
        if self.waist <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "waist",
                reason: format!("must be positive, got {}", self.waist),
            });
        }
        Ok(())
    }

    fn abs_ell(&self) -> u32 {
        self.ell.unsigned_abs()
    }

    /// `C` such that `∫ |LG|² d²r = 1`.
    pub fn normalization(&self) -> f64 {
        self.ln_normalization().exp()
    }

    fn ln_normalization(&self) -> f64 {
        let p = self.radial_index;
        0.5 * ((2.0 / PI).ln() + ln_factorial(p) - ln_factorial(p + self.abs_ell()))
            - self.waist.ln()
    }

    /// `|LG(r)|`.
    pub fn radial_envelope(&self, r: f64) -> f64 {
        self.ln_envelope(r).exp()
    }

    /// `ln |LG(r)|`; `-∞` on the vortex core and on radial nodes.
    pub fn ln_envelope(&self, r: f64) -> f64 {
        let w = self.waist;
        let x = 2.0 * r * r / (w * w);
        let mut ln = self.ln_normalization() - r * r / (w * w);
        if self.ell != 0 {
            ln += f64::from(self.abs_ell()) * (SQRT_2 * r / w).ln();
        }
        if self.radial_index > 0 {
            ln += laguerre(self.radial_index, f64::from(self.abs_ell()), x)
                .abs()
                .ln();
        }
        ln
    }

    /// Radius of maximal `|LG|`.
    pub fn peak_radius(&self) -> f64 {
        if self.radial_index == 0 {
            return self.waist * (f64::from(self.abs_ell()) / 2.0).sqrt();
        }
        let extent = self.waist
            * (3.0
                + 2.0
                    * (2.0 * f64::from(self.radial_index) + f64::from(self.abs_ell()) + 1.0)
                        .sqrt());
        let n = 20_000;
        (0..=n)
            .map(|k| extent * k as f64 / n as f64)
            .max_by(|&a, &b| self.ln_envelope(a).total_cmp(&self.ln_envelope(b)))
            .unwrap_or(0.0)
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// Generalized Laguerre polynomial `L_n^α(x)` by upward recurrence.
fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `LG_l(r, φ) = C (√2 r/w)^|l| e^{-r²/w²} L_p^|l|(2r²/w²) e^{i l φ}`.
pub fn lg_amplitude(r: f64, phi: f64, mode: &ModeSpec) -> Result<Complex64> {
    ensure_finite(r, "r")?;
    ensure_finite(phi, "phi")?;
    mode.validate()?;
    if r < 0.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("radius must be non-negative, got {r}"),
        });
    }
    let w = mode.waist;
    let x = 2.0 * r * r / (w * w);
    let modulus = mode.normalization()
        * (SQRT_2 * r / w).powi(mode.abs_ell() as i32)
        * (-r * r / (w * w)).exp()
        * laguerre(mode.radial_index, f64::from(mode.abs_ell()), x);
    Ok(Complex64::from_polar(modulus, f64::from(mode.ell) * phi))
}

/// Square, uniform sampling of the plane centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub samples: usize,
    /// Largest admissible `|LG|(boundary) / |LG|(peak)`.
    pub envelope_cutoff: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width: 5.0,
            samples: 256,
            envelope_cutoff: Self::DEFAULT_ENVELOPE_CUTOFF,
        }
    }
}

impl GridSpec {
    pub const DEFAULT_ENVELOPE_CUTOFF: f64 = 1e-6;
    pub const MIN_SAMPLES: usize = 16;

    pub fn new(half_width: f64, samples: usize) -> Result<Self> {
        let g = GridSpec {
            half_width,
            samples,
            envelope_cutoff: Self::DEFAULT_ENVELOPE_CUTOFF,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_envelope_cutoff(mut self, cutoff: f64) -> Self {
        self.envelope_cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.half_width, "half_width")?;
        if self.half_width <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "half_width",
                reason: format!("must be positive, got {}", self.half_width),
            });
        }
        if self.samples < Self::MIN_SAMPLES {
            return Err(Error::InvalidParameter {
                name: "samples",
                reason: format!(
                    "need at least {} per axis, got {}",
                    Self::MIN_SAMPLES,
                    self.samples
                ),
            });
        }
        Ok(())
    }

    /// `h = 2 half_width / (samples - 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.samples - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.coord(i)).collect()
    }

    /// `(x, y)` of a grid node; rows run along `y`, columns along `x`.
    pub fn point(&self, row: usize, col: usize) -> (f64, f64) {
        (self.coord(col), self.coord(row))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.samples, self.samples)
    }

    /// Largest `|LG|/|LG|_peak` at or beyond the nearest boundary distance.
    pub fn boundary_envelope_ratio(&self, mode: &ModeSpec) -> f64 {
        let ln_peak = mode.ln_envelope(mode.peak_radius());
        let span = 12.0 * mode.waist;
        let n = 2_000;
        (0..=n)
            .map(|k| self.half_width + span * k as f64 / n as f64)
            .map(|r| (mode.ln_envelope(r) - ln_peak).exp())
            .fold(0.0, f64::max)
    }

    pub fn check_envelope(&self, mode: &ModeSpec) -> Result<()> {
        let ratio = self.boundary_envelope_ratio(mode);
        if ratio > self.envelope_cutoff {
            return Err(Error::GridTooNarrow {
                ell: mode.ell,
                half_width: self.half_width,
                ratio,
                cutoff: self.envelope_cutoff,
            });
        }
        Ok(())
    }
}

/// Pointwise-normalized coefficients `a(r)`, `b(r)` sampled on a grid.
#[derive(Debug, Clone)]
pub struct CoeffField {
    /// `|LG_l1| / η`.
    pub a: Array2<Complex64>,
    /// `e^{i(Δl φ + δ)} |LG_l2| / η`.
    pub b: Array2<Complex64>,
    /// `true` where the envelope ratio is undefined.
    pub mask: Array2<bool>,
    pub delta: f64,
    grid: GridSpec,
}

impl CoeffField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_masked(&self, row: usize, col: usize) -> bool {
        self.mask[(row, col)]
    }

    /// Spatial overlaps `(<r|l1>, <r|l2>)`: the coefficients with the
    /// state's relative phase `δ` taken back out of `b`.
    pub fn mode_overlaps(&self, row: usize, col: usize) -> Option<(Complex64, Complex64)> {
        if self.mask[(row, col)] {
            return None;
        }
        let b = self.b[(row, col)] * Complex64::from_polar(1.0, -self.delta);
        Some((self.a[(row, col)], b))
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `max | |a|² + |b|² - 1 |` over unmasked points.
    pub fn max_normalization_error(&self) -> f64 {
        self.a
            .iter()
            .zip(self.b.iter())
            .zip(self.mask.iter())
            .filter(|(_, &m)| !m)
            .map(|((a, b), _)| (a.norm_sqr() + b.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `(|a|, |b|)` at radius `r`, from the log-ratio of the two envelopes.
fn envelope_pair(m1: &ModeSpec, m2: &ModeSpec, r: f64) -> Option<(f64, f64)> {
    let (l1, l2) = (m1.ln_envelope(r), m2.ln_envelope(r));
    let log_ratio = if l1 == f64::NEG_INFINITY && l2 == f64::NEG_INFINITY {
        if r != 0.0 {
            return None;
        }
        // both vortex cores: the lower charge dominates as r -> 0
        let (k1, k2) = (m1.ell.unsigned_abs(), m2.ell.unsigned_abs());
        match k1.cmp(&k2) {
            std::cmp::Ordering::Less => f64::NEG_INFINITY,
            std::cmp::Ordering::Greater => f64::INFINITY,
            std::cmp::Ordering::Equal => {
                let lead = |m: &ModeSpec| {
                    m.ln_normalization() + laguerre(m.radial_index, f64::from(k1), 0.0).abs().ln()
                        - f64::from(k1) * m.waist.ln()
                };
                lead(m2) - lead(m1)
            }
        }
    } else {
        l2 - l1
    };
    if log_ratio.is_nan() {
        return None;
    }
    if log_ratio == f64::INFINITY {
        return Some((0.0, 1.0));
    }
    if log_ratio == f64::NEG_INFINITY {
        return Some((1.0, 0.0));
    }
    if log_ratio > 0.0 {
        let t = (-log_ratio).exp();
        let b = 1.0 / (1.0 + t * t).sqrt();
        Some((t * b, b))
    } else {
        let t = log_ratio.exp();
        let a = 1.0 / (1.0 + t * t).sqrt();
        Some((a, t * a))
    }
}

/// `(a, b)` at polar position `(r, φ)`, or `None` where undefined.
pub fn coefficients_at(
    state: &HybridStateSpec,
    r: f64,
    phi: f64,
) -> Option<(Complex64, Complex64)> {
    let (m1, m2) = state.modes();
    let (a, b) = envelope_pair(&m1, &m2, r)?;
    let theta = f64::from(state.delta_ell()) * phi + state.delta;
    Some((Complex64::new(a, 0.0), Complex64::from_polar(b, theta)))
}

/// Sample `a(r)`, `b(r)` over the grid.
pub fn coeff_field(state: &HybridStateSpec, grid: &GridSpec) -> Result<CoeffField> {
    state.validate()?;
    grid.validate()?;
    let (m1, m2) = state.modes();
    grid.check_envelope(&m1)?;
    grid.check_envelope(&m2)?;

    let n = grid.samples;
    let mut a = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
    let mut b = a.clone();
    let mut mask = Array2::from_elem((n, n), false);
    for row in 0..n {
        for col in 0..n {
            let (x, y) = grid.point(row, col);
            match coefficients_at(state, x.hypot(y), y.atan2(x)) {
                Some((ca, cb)) => {
                    a[(row, col)] = ca;
                    b[(row, col)] = cb;
                }
                None => mask[(row, col)] = true,
            }
        }
    }
    Ok(CoeffField {
        a,
        b,
        mask,
        delta: state.delta,
        grid: *grid,
    })
}
