//! End-to-end evaluation of one noise level: state, channel (exact or via
//! simulated tomography), Stokes texture, Skyrmion number and witnesses.

use crate::biphoton::{
    apply_isotropic_noise, p_to_contrast, pure_state, DensityMatrix4, HybridStateSpec,
};
use crate::error::Result;
use crate::lgmodes::GridSpec;
use crate::tomography::{
    average_quantum_contrast, mle_reconstruct, noise_rate_for_weight, settings_36, simulate_counts,
    witness_report, CountModel, MleOptions, WitnessReport,
};
use crate::topology::{skyrmion_number, texture, SkyrmionResult};

/// How the noisy state is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pipeline {
    /// Exact channel output.
    #[default]
    Analytic,
    /// Simulated counts followed by maximum-likelihood reconstruction.
    Tomographic,
}

/// Everything measured at one noise level.
#[derive(Debug, Clone)]
pub struct PointResult {
    /// Requested weight.
    pub target_p: f64,
    /// Weight of the state actually analysed.
    pub p: f64,
    /// `Qc` paired with `p` through the `d = 2` contrast relation.
    pub quantum_contrast: f64,
    /// Average contrast estimated from the counts (tomographic only).
    pub measured_contrast: Option<f64>,
    pub witnesses: WitnessReport,
    pub skyrmion: SkyrmionResult,
    pub rho: DensityMatrix4,
    /// The target weight was beyond what the generator can realize.
    pub clamped: bool,
    /// MLE convergence flag (tomographic only).
    pub mle_converged: Option<bool>,
}

/// Exact channel output at weight `p`.
pub fn analytic_point(spec: &HybridStateSpec, p: f64, grid: &GridSpec) -> Result<PointResult> {
    let rho = apply_isotropic_noise(&pure_state(spec)?, p)?;
    finish(spec, grid, rho, p, p, None, false, None)
}

/// Counts simulated for the pure state with a flat noise rate chosen to
/// realize weight `p`, reconstructed by MLE. `model` supplies the pair
/// rate, window, duration and sampling; its noise rates are overwritten.
pub fn tomographic_point(
    spec: &HybridStateSpec,
    p: f64,
    grid: &GridSpec,
    model: &CountModel,
    mle: &MleOptions,
) -> Result<PointResult> {
    let target = noise_rate_for_weight(p, model.pair_rate, model.coincidence_window)?;
    let model = CountModel {
        pair_rate: target.pair_rate,
        ..*model
    }
    .with_noise_rate(target.noise_rate);
    let record = simulate_counts(&pure_state(spec)?, &settings_36(), &model)?;
    let measured = average_quantum_contrast(&record)?.value;
    let fit = mle_reconstruct(&record, mle)?;
    finish(
        spec,
        grid,
        fit.rho,
        p,
        target.realized_p,
        Some(measured),
        target.clamped,
        Some(fit.converged),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &HybridStateSpec,
    grid: &GridSpec,
    rho: DensityMatrix4,
    target_p: f64,
    p: f64,
    measured_contrast: Option<f64>,
    clamped: bool,
    mle_converged: Option<bool>,
) -> Result<PointResult> {
    let skyrmion = skyrmion_number(&texture(&rho, spec, grid)?, grid)?;
    Ok(PointResult {
        target_p,
        p,
        quantum_contrast: p_to_contrast(p, 2)?,
        measured_contrast,
        witnesses: witness_report(&rho, spec)?,
        skyrmion,
        rho,
        clamped,
        mle_converged,
    })
}

/// Dispatch on [`Pipeline`].
pub fn evaluate_point(
    pipeline: Pipeline,
    spec: &HybridStateSpec,
    p: f64,
    grid: &GridSpec,
    model: &CountModel,
    mle: &MleOptions,
) -> Result<PointResult> {
    match pipeline {
        Pipeline::Analytic => analytic_point(spec, p, grid),
        Pipeline::Tomographic => tomographic_point(spec, p, grid, model, mle),
    }
}
