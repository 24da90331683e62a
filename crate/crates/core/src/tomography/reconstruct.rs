use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::biphoton::DensityMatrix4;
use crate::error::{Error, Result};
use crate::linalg::{self, kron, pauli, trace4, trace_product, Mat4};

use super::counts::TomographyRecord;

/// Least-squares solution of `Tr[Π_k ρ] = f_k` over Hermitian, unit-trace
/// `ρ`, with `f_k` the coincidence frequencies within each basis pair.
/// The result may have small negative eigenvalues.
pub fn linear_inversion(rec: &TomographyRecord) -> Result<DensityMatrix4> {
    rec.validate()?;
    let freqs = rec.frequencies()?;
    let n = rec.entries.len();
    // ρ = (1/4) Σ r_μν σ_μ ⊗ σ_ν with r_00 = 1
    let mut design = DMatrix::<f64>::zeros(n, 15);
    let mut rhs = DVector::<f64>::zeros(n);
    for (k, e) in rec.entries.iter().enumerate() {
        for mu in 0..4 {
            for nu in 0..4 {
                if mu + nu > 0 {
                    design[(k, 4 * mu + nu - 1)] =
                        0.25 * e.setting.a.pauli_trace(mu) * e.setting.b.pauli_trace(nu);
                }
            }
        }
        rhs[k] = freqs[k] - 0.25;
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count();
    if rank < 15 {
        return Err(Error::RankDeficient(rank));
    }
    let r = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| Error::Record(e.to_string()))?;
    let mut m = kron(&pauli(0), &pauli(0));
    for mu in 0..4 {
        for nu in 0..4 {
            if mu + nu > 0 {
                m += kron(&pauli(mu), &pauli(nu)) * Complex64::new(r[4 * mu + nu - 1], 0.0);
            }
        }
    }
    DensityMatrix4::normalized(&(m * Complex64::new(0.25, 0.0)))
}

/// `Σ_k C_k ln Tr[Π_k ρ]`: the Poisson log-likelihood with the per-basis-pair
/// totals profiled out, up to a constant.
pub fn log_likelihood(rec: &TomographyRecord, rho: &DensityMatrix4) -> Result<f64> {
    rec.validate()?;
    Ok(rec
        .entries
        .iter()
        .map(|e| {
            xlogy(
                e.coincidences,
                trace_product(&e.setting.projector(), rho.matrix()).re,
            )
        })
        .sum())
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y <= 0.0 {
        f64::NEG_INFINITY
    } else {
        x * y.ln()
    }
}

/// Normalized log-likelihood as a function of the factor `L` in
/// `ρ = L L† / Tr(L L†)`.
#[derive(Debug, Clone)]
pub struct LikelihoodObjective {
    projectors: Vec<Mat4>,
    weights: Vec<f64>,
}

impl LikelihoodObjective {
    pub fn new(rec: &TomographyRecord) -> Result<Self> {
        rec.validate()?;
        let total = rec.total_coincidences();
        if total <= 0.0 {
            return Err(Error::Record("record has no coincidences".into()));
        }
        Ok(LikelihoodObjective {
            projectors: rec.entries.iter().map(|e| e.setting.projector()).collect(),
            weights: rec.entries.iter().map(|e| e.coincidences / total).collect(),
        })
    }

    fn probabilities(&self, factor: &Mat4) -> (Vec<f64>, f64) {
        let m = factor * factor.adjoint();
        let t = trace4(&m).re;
        (
            self.projectors
                .iter()
                .map(|p| trace_product(p, &m).re / t)
                .collect(),
            t,
        )
    }

    /// `Σ_k w_k ln p_k`, `w_k = C_k / Σ C`.
    pub fn value(&self, factor: &Mat4) -> f64 {
        let (probs, _) = self.probabilities(factor);
        self.weights
            .iter()
            .zip(&probs)
            .map(|(&w, &p)| xlogy(w, p))
            .sum()
    }

    /// `∂/∂Re L + i ∂/∂Im L` of [`Self::value`], which equals `2 G L` with
    /// `G = (Σ_k w_k Π_k / p_k - Σ_k w_k) / Tr(L L†)`.
    pub fn gradient(&self, factor: &Mat4) -> Mat4 {
        let (probs, t) = self.probabilities(factor);
        let mut g = Mat4::zeros();
        let mut w_sum = 0.0;
        for ((proj, &w), &p) in self.projectors.iter().zip(&self.weights).zip(&probs) {
            if w > 0.0 {
                g += proj * Complex64::new(w / p, 0.0);
                w_sum += w;
            }
        }
        g -= Mat4::identity() * Complex64::new(w_sum, 0.0);
        g * factor * Complex64::new(2.0 / t, 0.0)
    }
}

/// Stopping rules for [`mle_reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iters: usize,
    /// Converged once the gradient norm at unit-norm `L` falls below this,
    /// or once the objective gains less than `tol²` (relative) over
    /// [`MleOptions::PLATEAU_WINDOW`] iterations.
    pub tol: f64,
    /// Eigenvalue floor applied to the starting point.
    pub init_floor: f64,
}

impl MleOptions {
    pub const PLATEAU_WINDOW: usize = 50;
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iters: 20_000,
            tol: 1e-9,
            init_floor: 1e-6,
        }
    }
}

/// Maximum-likelihood estimate and optimizer diagnostics.
#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix4,
    /// [`log_likelihood`] of `rho`.
    pub log_likelihood: f64,
    pub iterations: usize,
    /// `false` when `max_iters` ran out; `rho` is then the best iterate.
    /// A line search that can no longer raise the objective in floating
    /// point counts as converged.
    pub converged: bool,
}

fn inner(a: &Mat4, b: &Mat4) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn floored(rho: &DensityMatrix4, floor: f64) -> Mat4 {
    let (values, vectors) = linalg::hermitian_eigen(rho.matrix());
    let clipped = values.map(|v| v.max(floor));
    let total = clipped.sum();
    // factor V sqrt(Λ)
    let diag = Mat4::from_diagonal(&clipped.map(|v| Complex64::new((v / total).sqrt(), 0.0)));
    vectors * diag
}

/// MLE over physical states, started from the floored linear inversion.
pub fn mle_reconstruct(rec: &TomographyRecord, options: &MleOptions) -> Result<MleResult> {
    let init = linear_inversion(rec)?;
    mle_reconstruct_from(rec, &init, options)
}

/// MLE over physical states by Barzilai–Borwein gradient ascent on the
/// factor `L`, with Armijo backtracking.
pub fn mle_reconstruct_from(
    rec: &TomographyRecord,
    init: &DensityMatrix4,
    options: &MleOptions,
) -> Result<MleResult> {
    let objective = LikelihoodObjective::new(rec)?;
    let mut l = floored(init, options.init_floor.max(f64::MIN_POSITIVE));
    let mut f = objective.value(&l);
    if !f.is_finite() {
        return Err(Error::Record("starting point has zero likelihood".into()));
    }
    let mut g = objective.gradient(&l);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut history = std::collections::VecDeque::with_capacity(MleOptions::PLATEAU_WINDOW + 1);
    history.push_back(f);
    while iterations < options.max_iters {
        let g2 = inner(&g, &g);
        if g2.sqrt() < options.tol {
            converged = true;
            break;
        }
        if history.len() > MleOptions::PLATEAU_WINDOW
            && f - history[0] <= options.tol * options.tol * (1.0 + f.abs())
        {
            converged = true;
            break;
        }
        iterations += 1;
        let mut trial_step = step;
        let accepted = loop {
            let cand = l + g * Complex64::new(trial_step, 0.0);
            let fc = objective.value(&cand);
            if fc >= f + 1e-4 * trial_step * g2 && fc > f {
                break Some((cand, fc));
            }
            trial_step *= 0.5;
            if trial_step < 1e-30 {
                break None;
            }
        };
        let Some((next, f_next)) = accepted else {
            converged = true;
            break;
        };
        let next = next / Complex64::new(linalg::frobenius(&next), 0.0);
        let g_next = objective.gradient(&next);
        let s = next - l;
        let y = g_next - g;
        let sy = inner(&s, &y);
        step = if sy < 0.0 {
            (inner(&s, &s) / -sy).clamp(1e-12, 1e12)
        } else {
            (trial_step * 2.0).min(1e12)
        };
        l = next;
        f = f_next;
        g = g_next;
        history.push_back(f);
        if history.len() > MleOptions::PLATEAU_WINDOW + 1 {
            history.pop_front();
        }
    }
    let rho = DensityMatrix4::normalized(&(l * l.adjoint()))?;
    let log_likelihood = log_likelihood(rec, &rho)?;
    Ok(MleResult {
        rho,
        log_likelihood,
        iterations,
        converged,
    })
}
