//! Expected Lipschitz-Killing curvatures of excursion sets `{f ≥ u}` on the
//! unit sphere, and the resulting excursion-probability approximation.
//!
//! `λ` is the second spectral moment: the variance of a unit-speed
//! directional derivative of the unit-variance field.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::specfun::gaussian_tail;

/// Order of the approximation error of [`excursion_prob_approx`]; the
/// constant `α` is not known in closed form.
pub const EXCURSION_ERROR_CLASS: &str = "O(exp(-alpha*u^2/2)), alpha>1";

/// `(𝓛₀, 𝓛₁, 𝓛₂)`: Euler characteristic, half boundary length, area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkcTriple<T> {
    pub l0: T,
    pub l1: T,
    pub l2: T,
}

impl<T: Real> LkcTriple<T> {
    /// Length of the excursion-set boundary, `2 𝓛₁`.
    pub fn boundary_length(&self) -> T {
        self.l1 + self.l1
    }

    fn scaled(self, s: T) -> Self {
        LkcTriple {
            l0: self.l0 * s,
            l1: self.l1 * s,
            l2: self.l2 * s,
        }
    }
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "second spectral moment λ = {lambda} must be positive"
        )));
    }
    Ok(())
}

fn gaussian_unchecked<T: Real>(u: T, lambda: T) -> LkcTriple<T> {
    let (pdf, tail) = gaussian_tail(u);
    let two = T::lit(2.0);
    let four_pi = T::lit(4.0) * T::PI();
    // 4πλ u e^{-u²/2}/(2π)^{3/2} = 2λ u φ(u)
    LkcTriple {
        l0: two * tail + two * lambda * u * pdf,
        l1: T::PI() * lambda.sqrt() * (-u * u / two).exp(),
        l2: four_pi * tail,
    }
}

/// Unit-variance isotropic Gaussian field with second spectral moment `λ`.
pub fn expected_lkc_gaussian<T: Real>(u: T, lambda: T) -> Result<LkcTriple<T>> {
    check_lambda(lambda)?;
    Ok(gaussian_unchecked(u, lambda))
}

/// Normalized random spherical harmonic of degree `ℓ`, for which
/// `λ = P'_ℓ(1) = ℓ(ℓ+1)/2`.
pub fn expected_lkc_eigen<T: Real>(u: T, ell: usize) -> Result<LkcTriple<T>> {
    if ell == 0 {
        return Err(Error::domain("eigenfunction degree must be ≥ 1"));
    }
    expected_lkc_gaussian(u, T::from_usize_lossy(ell * (ell + 1)) / T::lit(2.0))
}

/// `H₂(f) = f² - 1` of a unit-variance Gaussian `f` with moment `λ`. The
/// excursion set `{H₂(f) ≥ u}` is `{f ≥ v} ∪ {f ≤ -v}` with `v = √(u+1)`,
/// two disjoint copies of the Gaussian excursion at `v`.
pub fn expected_lkc_h2<T: Real>(u: T, lambda: T) -> Result<LkcTriple<T>> {
    check_lambda(lambda)?;
    if !(u >= -T::one()) {
        return Err(Error::domain(format!(
            "H₂ is bounded below by -1; level {u} is invalid"
        )));
    }
    let v = (u + T::one()).sqrt();
    Ok(gaussian_unchecked(v, lambda).scaled(T::lit(2.0)))
}

/// Cubic transform `f³`: the Gaussian formulas at `v = ∛u`
/// (real odd root).
pub fn expected_lkc_cubic<T: Real>(u: T, lambda: T) -> Result<LkcTriple<T>> {
    check_lambda(lambda)?;
    Ok(gaussian_unchecked(u.cbrt(), lambda))
}

/// `2(1 - Φ(u)) + 2uφ(u)λ`, the expected Euler characteristic of the
/// excursion set of a unit-variance Gaussian field with moment `λ`. Error
/// class: [`EXCURSION_ERROR_CLASS`]. `λ = 0` gives the gradient-free limit.
pub fn excursion_prob_approx<T: Real>(u: T, lambda: T) -> Result<T> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "second spectral moment λ = {lambda} must be ≥ 0"
        )));
    }
    let (pdf, tail) = gaussian_tail(u);
    let two = T::lit(2.0);
    Ok(two * tail + two * u * pdf * lambda)
}
