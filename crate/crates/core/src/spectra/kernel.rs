use crate::error::{Error, Result};
use crate::real::Real;

/// Zonal kernel `K(t) = Σ_{ℓ ≤ L_K} (2ℓ+1)/(4π) κ(ℓ) P_ℓ(t)`; convolution
/// with it multiplies harmonic coefficients by `κ(ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernel<T> {
    kappa: Vec<T>,
}

impl<T: Real> SmoothingKernel<T> {
    /// Coefficients `κ(0), …, κ(L_K)`.
    pub fn new(kappa: Vec<T>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::Invalid(
                "smoothing kernel has no coefficients".into(),
            ));
        }
        if kappa.iter().any(|k| !k.is_finite()) {
            return Err(Error::Invalid(
                "smoothing kernel coefficients must be finite".into(),
            ));
        }
        Ok(SmoothingKernel { kappa })
    }

    /// `κ ≡ 1` on `0..=L_K`.
    pub fn flat(l_k: usize) -> Self {
        SmoothingKernel {
            kappa: vec![T::one(); l_k + 1],
        }
    }

    /// `K ≡ 1`, i.e. `κ(0) = 4π` and nothing else: `g` becomes the sphere integral.
    pub fn constant() -> Self {
        SmoothingKernel {
            kappa: vec![T::lit(4.0) * T::PI()],
        }
    }

    pub fn l_k(&self) -> usize {
        self.kappa.len() - 1
    }

    pub fn kappa(&self, ell: usize) -> T {
        self.kappa.get(ell).copied().unwrap_or_else(T::zero)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.kappa
    }

    /// `K(t)` for `t ∈ [-1, 1]`.
    pub fn eval(&self, t: T) -> T {
        let p = crate::specfun::legendre_table(self.l_k(), t);
        let four_pi = T::lit(4.0) * T::PI();
        self.kappa
            .iter()
            .zip(p)
            .enumerate()
            .map(|(l, (&k, pl))| T::from_usize_lossy(2 * l + 1) / four_pi * k * pl)
            .sum()
    }
}
