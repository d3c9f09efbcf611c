//! Angular power spectra, needlet windows, smoothing kernels and the
//! spectra of Hermite-subordinated, kernel-smoothed needlet fields.

mod kernel;
mod spectrum;
mod transformed;
mod window;

pub use kernel::SmoothingKernel;
pub use spectrum::{PowerSpectrum, SpectrumModel};
pub use transformed::{
    lambda_jq, transformed_spectrum, transformed_spectrum_via_convolution, TransformedSpectrum,
    MAX_ORDER,
};
pub use window::{ExplicitWindow, NeedletProfile, NeedletWindow, Window};

use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};

/// Checks that the window's support fits inside the spectrum.
fn check_support<T: Real, W: Window<T> + ?Sized>(w: &W, spec: &PowerSpectrum<T>) -> Result<()> {
    let (_, hi) = w.support();
    if hi > spec.ellmax() {
        return Err(Error::Truncated {
            needed: hi,
            ellmax: spec.ellmax(),
        });
    }
    Ok(())
}

/// `Σ_ℓ b²(ℓ)(2ℓ+1) C_ℓ f(ℓ)`, ascending ℓ, compensated.
fn weighted_sum<T: Real, W: Window<T> + ?Sized>(
    w: &W,
    spec: &PowerSpectrum<T>,
    f: impl Fn(usize) -> T,
) -> Result<T> {
    check_support(w, spec)?;
    let (lo, hi) = w.support();
    let mut acc = CompensatedSum::new();
    for ell in lo.max(1)..=hi {
        let b2 = w.b2(ell);
        if b2 != T::zero() {
            acc.add(b2 * T::from_usize_lossy(2 * ell + 1) * spec.eval(ell)? * f(ell));
        }
    }
    Ok(acc.value())
}

/// Variance of the filtered field, `Σ b²(ℓ)(2ℓ+1) C_ℓ / 4π`.
pub fn field_variance<T: Real, W: Window<T> + ?Sized>(w: &W, spec: &PowerSpectrum<T>) -> Result<T> {
    Ok(weighted_sum(w, spec, |_| T::one())? / (T::lit(4.0) * T::PI()))
}

/// Second spectral moment `λ = Σ b²(2ℓ+1)C_ℓ P'_ℓ(1) / Σ b²(2ℓ+1)C_ℓ` of
/// the normalized filtered field, with `P'_ℓ(1) = ℓ(ℓ+1)/2`.
pub fn spectral_moment<T: Real, W: Window<T> + ?Sized>(
    w: &W,
    spec: &PowerSpectrum<T>,
) -> Result<T> {
    let den = weighted_sum(w, spec, |_| T::one())?;
    if !(den > T::zero()) {
        return Err(Error::Degenerate("window carries no variance".into()));
    }
    let num = weighted_sum(w, spec, |ell| {
        T::from_usize_lossy(ell * (ell + 1)) / T::lit(2.0)
    })?;
    Ok(num / den)
}

/// `𝓛₂`-scaled moment `4π λ`.
pub fn spectral_moment_area<T: Real, W: Window<T> + ?Sized>(
    w: &W,
    spec: &PowerSpectrum<T>,
) -> Result<T> {
    Ok(T::lit(4.0) * T::PI() * spectral_moment(w, spec)?)
}
