use super::rng::{stream, RngKey};
use super::transform::Transform;
use super::{pointwise_hermite, sample_alm_from_cl, HarmonicCoefficients, PixelField, SphereGrid};
use crate::error::{Error, Result};
use crate::spectra::{
    field_variance, transformed_spectrum, PowerSpectrum, SmoothingKernel, TransformedSpectrum,
    Window,
};

/// Draws isotropic Gaussian fields with a fixed spectrum on a fixed grid.
#[derive(Debug)]
pub struct GaussianSampler {
    cl: Vec<f64>,
    transform: Transform,
}

impl GaussianSampler {
    /// `cl[ℓ]` for `ℓ = 0..=band`.
    pub fn new(cl: Vec<f64>, grid: &SphereGrid) -> Result<Self> {
        if cl.is_empty() || cl.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::domain("spectrum values must be finite and ≥ 0"));
        }
        let band = cl.len() - 1;
        check_synthesis(grid, band)?;
        Ok(GaussianSampler {
            transform: Transform::new(grid, band),
            cl,
        })
    }

    /// Unit-variance filtered field `β_j / σ_j` (monopole excluded).
    pub fn filtered<W: Window<f64> + ?Sized>(
        spec: &PowerSpectrum<f64>,
        w: &W,
        grid: &SphereGrid,
    ) -> Result<Self> {
        let sigma2 = field_variance(w, spec)?;
        if !(sigma2 > 0.0) {
            return Err(Error::Degenerate("filtered field has zero variance".into()));
        }
        let (_, hi) = w.support();
        let mut cl = vec![0.0; hi + 1];
        for (ell, c) in cl.iter_mut().enumerate().skip(1) {
            let b2 = w.b2(ell);
            if b2 > 0.0 {
                *c = b2 * spec.eval(ell)? / sigma2;
            }
        }
        GaussianSampler::new(cl, grid)
    }

    pub fn cl(&self) -> &[f64] {
        &self.cl
    }

    pub fn band(&self) -> usize {
        self.cl.len() - 1
    }

    /// `Σ (2ℓ+1) C_ℓ / 4π`.
    pub fn variance(&self) -> f64 {
        self.cl
            .iter()
            .enumerate()
            .map(|(l, c)| (2 * l + 1) as f64 * c)
            .sum::<f64>()
            / (4.0 * std::f64::consts::PI)
    }

    pub fn grid(&self) -> &SphereGrid {
        self.transform.grid()
    }

    pub fn sample_alm(&self, key: RngKey) -> HarmonicCoefficients {
        sample_alm_from_cl(&self.cl, self.band(), key)
    }

    pub fn sample(&self, key: RngKey) -> Result<(PixelField, HarmonicCoefficients)> {
        let alm = self.sample_alm(key);
        Ok((self.transform.synthesize(&alm)?, alm))
    }
}

fn check_synthesis(grid: &SphereGrid, band: usize) -> Result<()> {
    if grid.n_theta() < band + 1 || grid.n_phi() < 2 * band + 1 {
        return Err(Error::UnderResolved(format!(
            "grid {}×{} cannot carry band limit {band}",
            grid.n_theta(),
            grid.n_phi()
        )));
    }
    Ok(())
}

/// One realization of `g_{j;q}`.
#[derive(Debug, Clone)]
pub struct GjqRealization {
    /// `g_{j;q}` including its monopole.
    pub raw: PixelField,
    pub raw_alm: HarmonicCoefficients,
}

/// Precomputed chain sample → needlet filter → synthesize → `H_q(·/σ)` →
/// analyze → kernel → synthesize, all on one grid.
#[derive(Debug)]
pub struct GjqPipeline {
    q: usize,
    beta: GaussianSampler,
    analysis: Transform,
    kappa: Vec<f64>,
    spectrum: TransformedSpectrum<f64>,
}

impl GjqPipeline {
    pub fn new<W: Window<f64> + ?Sized>(
        spec: &PowerSpectrum<f64>,
        w: &W,
        k: &SmoothingKernel<f64>,
        q: usize,
        grid: &SphereGrid,
    ) -> Result<Self> {
        let spectrum = transformed_spectrum(q, w, spec, k)?;
        let beta = GaussianSampler::filtered(spec, w, grid)?;
        let band = beta.band();
        let out_band = k.l_k().min(q * band);
        let degree = q * band + out_band;
        if degree > grid.max_product_degree() {
            return Err(Error::UnderResolved(format!(
                "H_{q} of a band-{band} field needs quadrature exact to degree {degree}; grid {}×{} reaches {}",
                grid.n_theta(),
                grid.n_phi(),
                grid.max_product_degree()
            )));
        }
        Ok(GjqPipeline {
            q,
            beta,
            analysis: Transform::new(grid, out_band),
            kappa: (0..=out_band).map(|l| k.kappa(l)).collect(),
            spectrum,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Closed-form spectrum of the output field.
    pub fn spectrum(&self) -> &TransformedSpectrum<f64> {
        &self.spectrum
    }

    pub fn grid(&self) -> &SphereGrid {
        self.analysis.grid()
    }

    pub fn band(&self) -> usize {
        self.analysis.lmax()
    }

    pub fn realize(&self, key: RngKey) -> Result<GjqRealization> {
        let raw_alm = self.realize_alm(key)?;
        let raw = self.analysis.synthesize(&raw_alm)?;
        Ok(GjqRealization { raw, raw_alm })
    }

    /// Harmonic coefficients of `g_{j;q}` without the final synthesis.
    pub fn realize_alm(&self, key: RngKey) -> Result<HarmonicCoefficients> {
        let (beta, _) = self.beta.sample(key.with_stream(stream::FIELD))?;
        // the sampler already divides by the closed-form σ
        let hq = pointwise_hermite(&beta, self.q, 1.0)?;
        let coeffs = self.analysis.analyze_band(&hq, self.q * self.beta.band())?;
        Ok(coeffs.filter(|l| self.kappa[l]))
    }

    /// Standard deviation of `g_{j;q}` without its monopole.
    pub fn normalization(&self) -> Result<f64> {
        let v = self.spectrum.variance_without_monopole();
        if !(v > 0.0) {
            return Err(Error::Degenerate("kernel keeps no multipole ℓ ≥ 1".into()));
        }
        Ok(v.sqrt())
    }

    /// `g̃_{j;q}`: monopole removed, divided by the closed-form standard
    /// deviation of the remainder.
    pub fn normalized(&self, r: &GjqRealization) -> Result<(PixelField, HarmonicCoefficients)> {
        let s = self.normalization()?;
        let mono = r.raw_alm.get(0, 0).re / (4.0 * std::f64::consts::PI).sqrt();
        let field = r.raw.map(|v| (v - mono) / s);
        let alm = r.raw_alm.filter(|l| if l == 0 { 0.0 } else { 1.0 / s });
        Ok((field, alm))
    }

    /// Gaussian surrogate with the spectrum of `g̃_{j;q}`.
    pub fn surrogate_sampler(&self) -> Result<GaussianSampler> {
        let s2 = self.normalization()?.powi(2);
        let mut cl: Vec<f64> = self.spectrum.values()[..=self.band()]
            .iter()
            .map(|c| c / s2)
            .collect();
        cl[0] = 0.0;
        GaussianSampler::new(cl, self.grid())
    }
}

/// One-shot `g_{j;q}` realization (raw and normalized).
pub fn build_gjq<W: Window<f64> + ?Sized>(
    spec: &PowerSpectrum<f64>,
    w: &W,
    k: &SmoothingKernel<f64>,
    q: usize,
    grid: &SphereGrid,
    key: RngKey,
) -> Result<(GjqRealization, PixelField)> {
    let pipe = GjqPipeline::new(spec, w, k, q, grid)?;
    let r = pipe.realize(key)?;
    let (normalized, _) = pipe.normalized(&r)?;
    Ok((r, normalized))
}

/// Gaussian field drawn from the transformed spectrum as given.
pub fn build_surrogate(
    ts: &TransformedSpectrum<f64>,
    grid: &SphereGrid,
    key: RngKey,
) -> Result<PixelField> {
    let sampler = GaussianSampler::new(ts.values().to_vec(), grid)?;
    Ok(sampler.sample(key.with_stream(stream::SURROGATE))?.0)
}
