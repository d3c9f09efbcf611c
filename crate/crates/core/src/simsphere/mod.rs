//! Band-limited isotropic Gaussian fields on a Gauss-Legendre grid, needlet
//! filtering, Hermite subordination, kernel smoothing and Gaussian surrogates.

mod alm;
mod grid;
pub mod io;
mod pipeline;
mod rng;
mod transform;

pub use alm::HarmonicCoefficients;
pub use grid::{gauss_legendre, SphereGrid};
pub use pipeline::{build_gjq, build_surrogate, GaussianSampler, GjqPipeline, GjqRealization};
pub use rng::{stream, RngKey};
pub use transform::{evaluate, Transform};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::hermite;
use crate::spectra::PowerSpectrum;
use rng::NormalPairs;

/// Real values on the nodes of a [`SphereGrid`], ring-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelField {
    n_theta: usize,
    n_phi: usize,
    values: Vec<f64>,
}

impl PixelField {
    pub fn new(n_theta: usize, n_phi: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            n_theta * n_phi,
            "field size does not match grid"
        );
        PixelField {
            n_theta,
            n_phi,
            values,
        }
    }

    /// Samples `f(θ, φ)` on the grid nodes.
    pub fn from_fn(grid: &SphereGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|n| {
                let (th, ph) = grid.node(n);
                f(th, ph)
            })
            .collect();
        PixelField::new(grid.n_theta(), grid.n_phi(), values)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at(&self, ring: usize, k: usize) -> f64 {
        self.values[ring * self.n_phi + k]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PixelField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn matches(&self, grid: &SphereGrid) -> Result<()> {
        if self.n_theta != grid.n_theta() || self.n_phi != grid.n_phi() {
            return Err(Error::Invalid(format!(
                "field is {}×{} but the grid is {}×{}",
                self.n_theta,
                self.n_phi,
                grid.n_theta(),
                grid.n_phi()
            )));
        }
        Ok(())
    }
}

/// Gaussian coefficients with `E|a_ℓm|² = cl[ℓ]` (`cl[0]` is the monopole);
/// multipoles beyond `cl.len()` are zero.
pub fn sample_alm_from_cl(cl: &[f64], lmax: usize, key: RngKey) -> HarmonicCoefficients {
    let mut out = HarmonicCoefficients::zeros(lmax);
    let mut normals = NormalPairs::new(key);
    let zero = Complex64::new(0.0, 0.0);
    let data = out.packed_mut();
    for ell in 0..=lmax {
        let c = cl.get(ell).copied().unwrap_or(0.0);
        for m in 0..=ell {
            let (z1, z2) = normals.next_pair();
            let value = if c <= 0.0 {
                zero
            } else if m == 0 {
                Complex64::new(c.sqrt() * z1, 0.0)
            } else {
                let s = (0.5 * c).sqrt();
                Complex64::new(s * z1, s * z2)
            };
            data[alm::packed_index(lmax, ell, m)] = value;
        }
    }
    out
}

/// Gaussian coefficients for `spec` on `1 ≤ ℓ ≤ lmax` (no monopole).
pub fn sample_alm(
    spec: &PowerSpectrum<f64>,
    lmax: usize,
    key: RngKey,
) -> Result<HarmonicCoefficients> {
    if lmax > spec.ellmax() {
        return Err(Error::Truncated {
            needed: lmax,
            ellmax: spec.ellmax(),
        });
    }
    let mut cl = vec![0.0; lmax + 1];
    for (ell, c) in cl.iter_mut().enumerate().skip(1) {
        *c = spec.eval(ell)?;
    }
    Ok(sample_alm_from_cl(&cl, lmax, key))
}

/// `a_ℓm ↦ multiplier(ℓ) a_ℓm`.
pub fn harmonic_filter(
    alm: &HarmonicCoefficients,
    multiplier: impl Fn(usize) -> f64,
) -> HarmonicCoefficients {
    alm.filter(multiplier)
}

/// Node-wise `H_q(value / σ)`.
pub fn pointwise_hermite(field: &PixelField, q: usize, sigma: f64) -> Result<PixelField> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "standard deviation σ = {sigma} must be positive"
        )));
    }
    let q = i32::try_from(q).map_err(|_| Error::domain("Hermite order too large"))?;
    if q < 1 {
        return Err(Error::domain("Hermite order must be ≥ 1"));
    }
    Ok(field.map(|v| hermite(q, v / sigma).expect("order ≥ 1")))
}

/// Synthesizes `alm` on `grid` with a one-off transform.
pub fn synthesize(alm: &HarmonicCoefficients, grid: &SphereGrid) -> Result<PixelField> {
    Transform::new(grid, alm.lmax()).synthesize(alm)
}

/// Analyzes a field of band limit `≤ lmax` with a one-off transform.
pub fn analyze(field: &PixelField, grid: &SphereGrid, lmax: usize) -> Result<HarmonicCoefficients> {
    field.matches(grid)?;
    Transform::new(grid, lmax).analyze(field)
}
