//! Simulated 36-setting coincidence tomography: count generation with
//! accidentals, quantum-contrast estimation, density-matrix reconstruction
//! and entanglement witnesses.

mod counts;
mod reconstruct;
mod settings;
mod witness;

pub use counts::{
    average_quantum_contrast, noise_rate_for_contrast, noise_rate_for_weight,
    peak_quantum_contrast, simulate_counts, ContrastEstimate, CountModel, NoiseTarget, Sampling,
    SettingCounts, TomographyRecord, CONTRAST_CAP,
};
pub use reconstruct::{
    linear_inversion, log_likelihood, mle_reconstruct, mle_reconstruct_from, LikelihoodObjective,
    MleOptions, MleResult,
};
pub use settings::{
    mub_states, settings_36, Eigen, MeasurementSetting, PauliBasis, QubitProjector,
};
pub use witness::{concurrence, fidelity, witness_report, WitnessReport};
