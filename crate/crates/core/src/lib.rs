//! Skyrmionic biphoton states under isotropic noise.
//!
//! A hybrid OAM–polarization state `(|l1>|P1> + e^{iδ}|l2>|P2>)/√2` defines,
//! through the polarization of photon B conditioned on the position of
//! photon A, a Stokes texture on the plane. This crate builds the state,
//! degrades it with white noise, samples the texture, integrates its
//! Skyrmion number, and simulates the coincidence tomography used to
//! measure it.
//!
//! ```
//! use qsky::{GridSpec, HybridStateSpec};
//!
//! let spec = HybridStateSpec::new(0, 3);
//! let grid = GridSpec::new(5.0, 128)?;
//! let clean = qsky::topology::skyrmion_number_at(&spec, 1.0, &grid)?;
//! let noisy = qsky::topology::skyrmion_number_at(&spec, 0.3, &grid)?;
//! assert_eq!(clean.rounded, 3);
//! assert!((clean.n - noisy.n).abs() < 1e-9);
//! # Ok::<(), qsky::Error>(())
//! ```

pub mod biphoton;
pub mod error;
pub mod lgmodes;
mod linalg;
pub mod pipeline;
pub mod stokesfield;
pub mod tomography;
pub mod topology;

pub use biphoton::{DensityMatrix4, HybridStateSpec, Polarization};
pub use error::{Error, Result};
pub use lgmodes::{CoeffField, GridSpec, ModeSpec};
pub use linalg::{Mat2, Mat4};
pub use stokesfield::{StokesAxis, StokesField, UnitVectorField};
pub use topology::SkyrmionResult;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/stokes.md")]
    mod stokes {}
    #[doc = include_str!("../../../book/src/skyrmion.md")]
    mod skyrmion {}
    #[doc = include_str!("../../../book/src/tomography.md")]
    mod tomography {}
}
