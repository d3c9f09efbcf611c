use num_complex::Complex64;

use crate::error::{Error, Result};

/// Index of `(ℓ, m ≥ 0)` in m-major packing for band limit `lmax`.
#[inline]
pub(crate) fn packed_index(lmax: usize, ell: usize, m: usize) -> usize {
    m * (lmax + 1) - m * (m.saturating_sub(1)) / 2 + (ell - m)
}

/// Number of `(ℓ, m)` pairs with `0 ≤ m ≤ ℓ ≤ lmax`.
#[inline]
pub(crate) fn packed_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Harmonic coefficients `a_ℓm` of a real field, `0 ≤ ℓ ≤ lmax`.
///
/// Only `m ≥ 0` is stored; `a_{ℓ,-m} = (-1)^m conj(a_ℓm)` and `a_ℓ0` is real.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    lmax: usize,
    data: Vec<Complex64>,
}

impl HarmonicCoefficients {
    pub fn zeros(lmax: usize) -> Self {
        HarmonicCoefficients {
            lmax,
            data: vec![Complex64::new(0.0, 0.0); packed_len(lmax)],
        }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// `a_ℓm` for any `-ℓ ≤ m ≤ ℓ`; zero above `lmax`.
    pub fn get(&self, ell: usize, m: i64) -> Complex64 {
        let am = m.unsigned_abs() as usize;
        if ell > self.lmax || am > ell {
            return Complex64::new(0.0, 0.0);
        }
        let a = self.data[packed_index(self.lmax, ell, am)];
        if m >= 0 {
            a
        } else if am % 2 == 0 {
            a.conj()
        } else {
            -a.conj()
        }
    }

    /// Sets `a_ℓm` for `m ≥ 0` (the `-m` partner follows). `a_ℓ0` must be real.
    pub fn set(&mut self, ell: usize, m: usize, value: Complex64) -> Result<()> {
        if ell > self.lmax || m > ell {
            return Err(Error::Invalid(format!(
                "coefficient ({ell}, {m}) outside band limit {}",
                self.lmax
            )));
        }
        if m == 0 && value.im != 0.0 {
            return Err(Error::Invalid(format!(
                "a_{ell},0 must be real, got {value}"
            )));
        }
        self.data[packed_index(self.lmax, ell, m)] = value;
        Ok(())
    }

    /// Raw m-major storage: `ℓ = 0..=lmax` for `m = 0`, then `ℓ = 1..=lmax`
    /// for `m = 1`, and so on.
    pub(crate) fn packed(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn packed_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub(crate) fn from_packed(lmax: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), packed_len(lmax));
        HarmonicCoefficients { lmax, data }
    }

    /// Multiplies every `a_ℓm` by `multiplier(ℓ)`.
    pub fn filter(&self, multiplier: impl Fn(usize) -> f64) -> Self {
        let mults: Vec<f64> = (0..=self.lmax).map(&multiplier).collect();
        let mut out = self.clone();
        for m in 0..=self.lmax {
            let base = packed_index(self.lmax, m, m);
            for ell in m..=self.lmax {
                out.data[base + ell - m] *= mults[ell];
            }
        }
        out
    }

    /// Copy restricted (or zero-padded) to a new band limit.
    pub fn with_lmax(&self, lmax: usize) -> Self {
        let mut out = HarmonicCoefficients::zeros(lmax);
        for m in 0..=lmax.min(self.lmax) {
            for ell in m..=lmax.min(self.lmax) {
                out.data[packed_index(lmax, ell, m)] = self.data[packed_index(self.lmax, ell, m)];
            }
        }
        out
    }

    /// `Σ_m |a_ℓm|²`, the per-degree energy (`(2ℓ+1)` times the empirical `C_ℓ`).
    pub fn degree_power(&self, ell: usize) -> f64 {
        if ell > self.lmax {
            return 0.0;
        }
        let mut s = self.data[packed_index(self.lmax, ell, 0)].norm_sqr();
        for m in 1..=ell {
            s += 2.0 * self.data[packed_index(self.lmax, ell, m)].norm_sqr();
        }
        s
    }

    /// `Σ_ℓm |a_ℓm|²`, which by Parseval equals `∫ f²`.
    pub fn total_power(&self) -> f64 {
        (0..=self.lmax).map(|l| self.degree_power(l)).sum()
    }

    /// Largest `|a - b|` over all stored coefficients (band limits may differ).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let top = self.lmax.max(other.lmax);
        let mut worst: f64 = 0.0;
        for ell in 0..=top {
            for m in 0..=ell as i64 {
                worst = worst.max((self.get(ell, m) - other.get(ell, m)).norm());
            }
        }
        worst
    }
}
