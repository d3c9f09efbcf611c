//! Expected Lipschitz-Killing curvatures and excursion probabilities for
//! Gaussian and Gaussian-subordinated isotropic fields on the sphere, with
//! band-limited simulation and Monte Carlo validation.
//!
//! The closed-form modules are generic over [`Real`]; simulation and
//! geometry work in `f64`. The aliases below fix the scalar for the common
//! case.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod lkc;
pub mod real;
pub mod simsphere;
pub mod specfun;
pub mod spectra;
pub mod wigner;

pub use error::{Error, Result};
pub use real::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type PowerSpectrum = spectra::PowerSpectrum<f64>;
pub type NeedletWindow = spectra::NeedletWindow<f64>;
pub type ExplicitWindow = spectra::ExplicitWindow<f64>;
pub type SmoothingKernel = spectra::SmoothingKernel<f64>;
pub type TransformedSpectrum = spectra::TransformedSpectrum<f64>;
pub type LkcTriple = lkc::LkcTriple<f64>;
pub type ZeroCache = wigner::ZeroCache<f64>;
