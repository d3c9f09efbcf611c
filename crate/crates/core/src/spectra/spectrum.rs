use std::io::BufRead;

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumModel<T> {
    /// `C_ℓ = G ℓ^{-α}` with constant `G`.
    SachsWolfe { g: T, alpha: T },
    /// `C_ℓ = 1 / (ℓ(ℓ+1))`.
    Bardeen,
    /// Explicit values for `ℓ = 1..=ellmax` (element 0 is `C_1`).
    Tabulated(Vec<T>),
}

/// Angular power spectrum on `1 ≤ ℓ ≤ ellmax`. The monopole is not modeled.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<T> {
    model: SpectrumModel<T>,
    ellmax: usize,
}

impl<T: Real> PowerSpectrum<T> {
    /// Power law `G ℓ^{-α}`. Any `α > 0` is accepted; see
    /// [`PowerSpectrum::satisfies_condition_b`] for the `α > 2` regime.
    pub fn sachs_wolfe(g: T, alpha: T, ellmax: usize) -> Result<Self> {
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::domain(format!(
                "Sachs-Wolfe amplitude G = {g} must be positive"
            )));
        }
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::domain(format!(
                "Sachs-Wolfe exponent α = {alpha} must be positive"
            )));
        }
        Self::checked_ellmax(ellmax)?;
        Ok(PowerSpectrum {
            model: SpectrumModel::SachsWolfe { g, alpha },
            ellmax,
        })
    }

    pub fn bardeen(ellmax: usize) -> Self {
        PowerSpectrum {
            model: SpectrumModel::Bardeen,
            ellmax: ellmax.max(1),
        }
    }

    /// Values for `ℓ = 1, 2, …`; must be finite and non-negative.
    pub fn tabulated(values: Vec<T>) -> Result<Self> {
        Self::checked_ellmax(values.len())?;
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < T::zero())
        {
            return Err(Error::domain(format!(
                "C_{} = {v} is not a finite non-negative value",
                i + 1
            )));
        }
        Ok(PowerSpectrum {
            ellmax: values.len(),
            model: SpectrumModel::Tabulated(values),
        })
    }

    /// Reads a two-column `ℓ C_ℓ` table. Blank lines and `#` comments are
    /// skipped; multipoles must run `1, 2, …` without gaps (a leading `ℓ = 0`
    /// row is ignored).
    pub fn from_two_column<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut cols = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty());
            let (Some(l), Some(c), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(parse_err("expected two columns".into()));
            };
            let ell: usize = l
                .parse()
                .map_err(|_| parse_err(format!("bad multipole {l:?}")))?;
            let cl: f64 = c
                .parse()
                .map_err(|_| parse_err(format!("bad spectrum value {c:?}")))?;
            if ell == 0 && values.is_empty() {
                continue;
            }
            if ell != values.len() + 1 {
                return Err(parse_err(format!(
                    "expected multipole {}, found {ell}",
                    values.len() + 1
                )));
            }
            values.push(T::lit(cl));
        }
        Self::tabulated(values)
    }

    fn checked_ellmax(ellmax: usize) -> Result<()> {
        if ellmax == 0 {
            return Err(Error::domain("spectrum needs ellmax ≥ 1"));
        }
        Ok(())
    }

    pub fn model(&self) -> &SpectrumModel<T> {
        &self.model
    }

    pub fn ellmax(&self) -> usize {
        self.ellmax
    }

    /// `C_ℓ` for `1 ≤ ℓ ≤ ellmax`.
    pub fn eval(&self, ell: usize) -> Result<T> {
        if ell == 0 || ell > self.ellmax {
            return Err(Error::domain(format!(
                "multipole {ell} outside 1..={}",
                self.ellmax
            )));
        }
        let l = T::from_usize_lossy(ell);
        Ok(match &self.model {
            SpectrumModel::SachsWolfe { g, alpha } => *g * l.powf(-*alpha),
            SpectrumModel::Bardeen => T::one() / (l * (l + T::one())),
            SpectrumModel::Tabulated(v) => v[ell - 1],
        })
    }

    /// Same model with a different truncation point (tabulated spectra can
    /// only shrink).
    pub fn with_ellmax(&self, ellmax: usize) -> Result<Self> {
        Self::checked_ellmax(ellmax)?;
        match &self.model {
            SpectrumModel::Tabulated(v) => {
                if ellmax > v.len() {
                    return Err(Error::Truncated {
                        needed: ellmax,
                        ellmax: v.len(),
                    });
                }
                Self::tabulated(v[..ellmax].to_vec())
            }
            model => Ok(PowerSpectrum {
                model: model.clone(),
                ellmax,
            }),
        }
    }

    /// Power-law decay with `α > 2` and bounded amplitude. Bardeen spectra
    /// qualify (`ℓ² C_ℓ ∈ [1/2, 1)`); tabulated spectra are not classified.
    pub fn satisfies_condition_b(&self) -> bool {
        match &self.model {
            SpectrumModel::SachsWolfe { alpha, .. } => *alpha > T::lit(2.0),
            SpectrumModel::Bardeen => true,
            SpectrumModel::Tabulated(_) => false,
        }
    }

    /// Upper bound on `Σ_{ℓ > ellmax} (2ℓ+1) C_ℓ / 4π` for the analytic
    /// models; `None` for tabulated spectra or `α ≤ 1`.
    pub fn tail_bound(&self) -> Option<T> {
        let four_pi = T::lit(4.0) * T::PI();
        let n = T::from_usize_lossy(self.ellmax);
        match &self.model {
            // (2ℓ+1)ℓ^{-α} ≤ 3ℓ^{1-α}; integral bound from ellmax
            SpectrumModel::SachsWolfe { g, alpha } if *alpha > T::lit(2.0) => {
                let e = *alpha - T::lit(2.0);
                Some(T::lit(3.0) * *g * n.powf(-e) / e / four_pi)
            }
            // (2ℓ+1)/(ℓ(ℓ+1)) diverges logarithmically
            _ => None,
        }
    }
}
