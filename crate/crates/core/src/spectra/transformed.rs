use rayon::prelude::*;

use super::{check_support, field_variance, PowerSpectrum, SmoothingKernel, Window};
use crate::error::{Error, Result};
use crate::real::{CompensatedSum, Real};
use crate::wigner::ZeroCache;

/// Highest Hermite order supported by the transformed-spectrum routines.
pub const MAX_ORDER: usize = 4;

/// Angular power spectrum of `g_{j;q} = K ⋆ H_q(β_j / σ_j)` on `0 ≤ ℓ ≤ L_K`.
///
/// The monopole `ℓ = 0` is kept because it carries variance whenever
/// `κ(0) ≠ 0`; [`TransformedSpectrum::without_monopole`] drops it.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedSpectrum<T> {
    q: usize,
    values: Vec<T>,
    beta_variance: T,
    beta_band: usize,
}

impl<T: Real> TransformedSpectrum<T> {
    /// Spectrum given directly by its values for `ℓ = 0..`; used for
    /// surrogate sampling from externally supplied spectra.
    pub fn from_values(q: usize, values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::domain(
                "transformed spectrum values must be finite and ≥ 0",
            ));
        }
        let beta_band = values.len().saturating_sub(1);
        Ok(TransformedSpectrum {
            q,
            values,
            beta_variance: T::one(),
            beta_band,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// `C_{ℓ;j,q}` for `ℓ = 0..=L_K`.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, ell: usize) -> T {
        self.values.get(ell).copied().unwrap_or_else(T::zero)
    }

    /// Largest multipole carried (`L_K`).
    pub fn ellmax(&self) -> usize {
        self.values.len() - 1
    }

    /// Largest multipole of the unnormalized filtered field.
    pub fn beta_band(&self) -> usize {
        self.beta_band
    }

    /// Closed-form variance of the filtered field before normalization.
    pub fn beta_variance(&self) -> T {
        self.beta_variance
    }

    /// Band limit of `g`: `min(L_K, q · beta_band)`.
    pub fn band_limit(&self) -> usize {
        let top = self
            .values
            .iter()
            .rposition(|v| *v != T::zero())
            .unwrap_or(0);
        top.min(self.q * self.beta_band)
    }

    /// `Σ_{ℓ ≥ 0} (2ℓ+1)/(4π) C_{ℓ;j,q}`.
    pub fn variance(&self) -> T {
        self.variance_from(0)
    }

    /// `Σ_{ℓ ≥ 1} (2ℓ+1)/(4π) C_{ℓ;j,q}`.
    pub fn variance_without_monopole(&self) -> T {
        self.variance_from(1)
    }

    fn variance_from(&self, start: usize) -> T {
        let four_pi = T::lit(4.0) * T::PI();
        self.values
            .iter()
            .enumerate()
            .skip(start)
            .map(|(l, &c)| T::from_usize_lossy(2 * l + 1) * c / four_pi)
            .collect::<CompensatedSum<T>>()
            .value()
    }

    pub fn without_monopole(&self) -> Self {
        let mut out = self.clone();
        out.values[0] = T::zero();
        out
    }

    pub fn lambda(&self) -> Result<T> {
        lambda_jq(self)
    }
}

/// Normalized weights `v_ℓ = b²(ℓ)(2ℓ+1)C_ℓ / (4π σ²)` on the window support,
/// indexed by `ℓ` (zero below the support). They sum to one.
fn unit_weights<T: Real, W: Window<T> + ?Sized>(
    w: &W,
    spec: &PowerSpectrum<T>,
) -> Result<(Vec<T>, T)> {
    check_support(w, spec)?;
    let sigma2 = field_variance(w, spec)?;
    if !(sigma2 > T::zero()) {
        return Err(Error::Degenerate("filtered field has zero variance".into()));
    }
    let (_, hi) = w.support();
    let four_pi = T::lit(4.0) * T::PI();
    let mut v = vec![T::zero(); hi + 1];
    for (ell, slot) in v.iter_mut().enumerate().skip(1) {
        let b2 = w.b2(ell);
        if b2 != T::zero() {
            *slot = b2 * T::from_usize_lossy(2 * ell + 1) * spec.eval(ell)? / (four_pi * sigma2);
        }
    }
    Ok((v, sigma2))
}

fn check_order(q: usize) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&q) {
        return Err(Error::UnsupportedOrder {
            q,
            min: 1,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

fn factorial<T: Real>(q: usize) -> T {
    (1..=q)
        .map(T::from_usize_lossy)
        .fold(T::one(), |a, b| a * b)
}

/// Finishes `C_ℓ = q! κ²(ℓ) (4π/(2ℓ+1)) D(ℓ)` from the Legendre-coefficient
/// distribution `D` of `ρ^q`, with `ρ(t) = Σ v_ℓ P_ℓ(t)` the correlation of
/// the normalized filtered field.
fn finish<T: Real>(q: usize, dist: &[T], k: &SmoothingKernel<T>) -> Vec<T> {
    let scale = factorial::<T>(q) * T::lit(4.0) * T::PI();
    (0..=k.l_k())
        .map(|ell| {
            let kap = k.kappa(ell);
            let d = dist.get(ell).copied().unwrap_or_else(T::zero);
            scale * kap * kap * d / T::from_usize_lossy(2 * ell + 1)
        })
        .collect()
}

/// Spectrum of `K ⋆ H_q(β_j/σ_j)`. Orders 1 and 2 use the direct formulas
/// (the second through squared 3j₀₀₀ symbols); orders 3 and 4 go through the
/// chained Clebsch-Gordan convolution.
pub fn transformed_spectrum<T: Real, W: Window<T> + ?Sized>(
    q: usize,
    w: &W,
    spec: &PowerSpectrum<T>,
    k: &SmoothingKernel<T>,
) -> Result<TransformedSpectrum<T>> {
    check_order(q)?;
    let (v, sigma2) = unit_weights(w, spec)?;
    let cache = ZeroCache::new();
    let values = match q {
        1 => finish(1, &v, k),
        2 => {
            let (lo, hi) = w.support();
            let lo = lo.max(1);
            let four_pi = T::lit(4.0) * T::PI();
            (0..=k.l_k())
                .map(|ell| {
                    let kap = k.kappa(ell);
                    if kap == T::zero() {
                        return T::zero();
                    }
                    let mut acc = CompensatedSum::new();
                    for l1 in lo..=hi {
                        if v[l1] == T::zero() {
                            continue;
                        }
                        let l2_lo = l1.abs_diff(ell).max(lo);
                        let l2_hi = (l1 + ell).min(hi);
                        for l2 in l2_lo..=l2_hi {
                            acc.add(v[l1] * v[l2] * cache.squared(ell, l1, l2));
                        }
                    }
                    T::lit(2.0) * kap * kap * four_pi * acc.value()
                })
                .collect()
        }
        _ => finish(q, &power_distribution(&v, q, k.l_k(), &cache), k),
    };
    Ok(TransformedSpectrum {
        q,
        values,
        beta_variance: sigma2,
        beta_band: w.support().1,
    })
}

/// Same quantity for any `q`, always through the chained Clebsch-Gordan
/// convolution; exists as an independent route to the order-2 formula.
pub fn transformed_spectrum_via_convolution<T: Real, W: Window<T> + ?Sized>(
    q: usize,
    w: &W,
    spec: &PowerSpectrum<T>,
    k: &SmoothingKernel<T>,
) -> Result<TransformedSpectrum<T>> {
    check_order(q)?;
    let (v, sigma2) = unit_weights(w, spec)?;
    let cache = ZeroCache::new();
    let dist = power_distribution(&v, q, k.l_k(), &cache);
    Ok(TransformedSpectrum {
        q,
        values: finish(q, &dist, k),
        beta_variance: sigma2,
        beta_band: w.support().1,
    })
}

/// Legendre coefficients of `(Σ_ℓ v_ℓ P_ℓ)^q` up to `ell_cap`, via
/// `P_a P_b = Σ_λ C(a, b, λ) P_λ`.
fn power_distribution<T: Real>(v: &[T], q: usize, ell_cap: usize, cache: &ZeroCache<T>) -> Vec<T> {
    let nz: Vec<usize> = (0..v.len()).filter(|&l| v[l] != T::zero()).collect();
    let mut dist = v.to_vec();
    for step in 2..=q {
        let top = if step == q {
            ell_cap.min(dist.len() - 1 + v.len() - 1)
        } else {
            dist.len() - 1 + v.len() - 1
        };
        let prev = &dist;
        let next: Vec<T> = (0..=top)
            .into_par_iter()
            .map(|lam| {
                let mut acc = CompensatedSum::new();
                for (lp, &d) in prev.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    for &lk in &nz {
                        if lk + lp < lam || lk.abs_diff(lp) > lam {
                            continue;
                        }
                        acc.add(d * v[lk] * cache.coupling(lp, lk, lam));
                    }
                }
                acc.value()
            })
            .collect();
        dist = next;
    }
    dist
}

/// `λ_{j;q} = Σ_{ℓ=1}^{L_K} (2ℓ+1) C_{ℓ;j,q} P'_ℓ(1) / Σ_{ℓ=1}^{L_K} (2ℓ+1) C_{ℓ;j,q}`.
pub fn lambda_jq<T: Real>(ts: &TransformedSpectrum<T>) -> Result<T> {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (ell, &c) in ts.values.iter().enumerate().skip(1) {
        let wgt = T::from_usize_lossy(2 * ell + 1) * c;
        den.add(wgt);
        num.add(wgt * T::from_usize_lossy(ell * (ell + 1)) / T::lit(2.0));
    }
    let den = den.value();
    if !(den > T::zero()) {
        return Err(Error::Degenerate(
            "transformed spectrum vanishes for ℓ ≥ 1".into(),
        ));
    }
    Ok(num.value() / den)
}
