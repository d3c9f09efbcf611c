use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::alm::{packed_index, packed_len, HarmonicCoefficients};
use super::grid::SphereGrid;
use super::PixelField;
use crate::error::{Error, Result};

/// Orthonormal associated Legendre functions `λ_ℓm(x)` (with the
/// Condon-Shortley phase), `Y_ℓm = λ_ℓm(cos θ) e^{imφ}`, written in m-major
/// packing for `0 ≤ m ≤ ℓ ≤ lmax`.
pub(crate) fn fill_lambda(lmax: usize, x: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), packed_len(lmax));
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut diag = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            diag *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        let base = packed_index(lmax, m, m);
        out[base] = diag;
        if m == lmax {
            break;
        }
        out[base + 1] = x * ((2 * m + 3) as f64).sqrt() * diag;
        let mf = (m * m) as f64;
        for ell in m + 2..=lmax {
            let lf = ell as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf)).sqrt();
            let l1 = lf - 1.0;
            let b = ((l1 * l1 - mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
            let i = base + ell - m;
            out[i] = a * (x * out[i - 1] - b * out[i - 2]);
        }
    }
}

/// Value of the band-limited field `Σ a_ℓm Y_ℓm` at `(θ, φ)`, running the
/// Legendre recurrence on the fly (no allocation).
pub fn evaluate(alm: &HarmonicCoefficients, theta: f64, phi: f64) -> f64 {
    let lmax = alm.lmax();
    let a = alm.packed();
    let (s, x) = theta.sin_cos();
    let s = s.abs();
    let rot = Complex64::from_polar(1.0, phi);
    let mut phase = Complex64::new(1.0, 0.0);
    let mut diag = 1.0 / (4.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for m in 0..=lmax {
        if m > 0 {
            diag *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            phase *= rot;
            if diag == 0.0 {
                break;
            }
        }
        let base = packed_index(lmax, m, m);
        let mut fm = a[base] * diag;
        if m < lmax {
            let mf = (m * m) as f64;
            let (mut p2, mut p1) = (diag, x * ((2 * m + 3) as f64).sqrt() * diag);
            fm += a[base + 1] * p1;
            for ell in m + 2..=lmax {
                let lf = ell as f64;
                let l1 = lf - 1.0;
                let c_a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf)).sqrt();
                let c_b = ((l1 * l1 - mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
                let p = c_a * (x * p1 - c_b * p2);
                fm += a[base + ell - m] * p;
                p2 = p1;
                p1 = p;
            }
        }
        total += if m == 0 { fm.re } else { 2.0 * (fm * phase).re };
    }
    total
}

/// Precomputed spherical harmonic transform for one grid and band limit:
/// a Legendre table per ring plus FFT plans for the longitude sums.
pub struct Transform {
    grid: SphereGrid,
    lmax: usize,
    lambda: Vec<f64>,
    fft_inverse: Arc<dyn Fft<f64>>,
    fft_forward: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("n_theta", &self.grid.n_theta())
            .field("n_phi", &self.grid.n_phi())
            .field("lmax", &self.lmax)
            .finish()
    }
}

impl Transform {
    pub fn new(grid: &SphereGrid, lmax: usize) -> Self {
        let per_ring = packed_len(lmax);
        let mut lambda = vec![0.0; per_ring * grid.n_theta()];
        for (ring, &x) in lambda.chunks_mut(per_ring).zip(grid.cos_theta()) {
            fill_lambda(lmax, x, ring);
        }
        let mut planner = FftPlanner::new();
        Transform {
            grid: grid.clone(),
            lmax,
            lambda,
            fft_inverse: planner.plan_fft_inverse(grid.n_phi()),
            fft_forward: planner.plan_fft_forward(grid.n_phi()),
        }
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    fn ring_lambda(&self, i: usize) -> &[f64] {
        let n = packed_len(self.lmax);
        &self.lambda[i * n..(i + 1) * n]
    }

    /// Node values of `Σ a_ℓm Y_ℓm`. Coefficients above the plan's band limit
    /// are an error; the grid must satisfy `n_theta ≥ ℓmax + 1` and
    /// `n_phi ≥ 2 ℓmax + 1`.
    pub fn synthesize(&self, alm: &HarmonicCoefficients) -> Result<PixelField> {
        let band = alm.lmax();
        if band > self.lmax {
            return Err(Error::UnderResolved(format!(
                "coefficients reach ℓ = {band} but the transform stops at {}",
                self.lmax
            )));
        }
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        if nt < band + 1 || np < 2 * band + 1 {
            return Err(Error::UnderResolved(format!(
                "grid {nt}×{np} cannot carry band limit {band} (need {}×{})",
                band + 1,
                2 * band + 1
            )));
        }
        let a = alm.packed();
        let mut values = vec![0.0; nt * np];
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.fft_inverse.get_inplace_scratch_len()];
        for (i, out) in values.chunks_mut(np).enumerate() {
            let lam = self.ring_lambda(i);
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for m in 0..=band {
                let src = packed_index(band, m, m);
                let dst = packed_index(self.lmax, m, m);
                let fm: Complex64 = a[src..src + band - m + 1]
                    .iter()
                    .zip(&lam[dst..dst + band - m + 1])
                    .map(|(c, l)| c * l)
                    .sum();
                if m == 0 {
                    buf[0] += fm;
                } else {
                    buf[m % np] += fm;
                    buf[(np - m % np) % np] += fm.conj();
                }
            }
            self.fft_inverse
                .process_with_scratch(&mut buf, &mut scratch);
            for (o, c) in out.iter_mut().zip(&buf) {
                *o = c.re;
            }
        }
        Ok(PixelField::new(nt, np, values))
    }

    /// Coefficients up to the plan's band limit of a field whose own band
    /// limit is at most `lmax`.
    pub fn analyze(&self, field: &PixelField) -> Result<HarmonicCoefficients> {
        self.analyze_band(field, self.lmax)
    }

    /// Coefficients up to the plan's band limit of a field with band limit
    /// `field_band`; exact when `field_band + lmax ≤ min(2 n_theta - 1, n_phi - 1)`.
    pub fn analyze_band(
        &self,
        field: &PixelField,
        field_band: usize,
    ) -> Result<HarmonicCoefficients> {
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        if field.n_theta() != nt || field.n_phi() != np {
            return Err(Error::Invalid(format!(
                "field is {}×{} but the grid is {nt}×{np}",
                field.n_theta(),
                field.n_phi()
            )));
        }
        let degree = field_band + self.lmax;
        if degree > self.grid.max_product_degree() {
            return Err(Error::UnderResolved(format!(
                "analysis of a band-{field_band} field up to ℓ = {} needs exactness to degree {degree}; grid {nt}×{np} reaches {}",
                self.lmax,
                self.grid.max_product_degree()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); packed_len(self.lmax)];
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.fft_forward.get_inplace_scratch_len()];
        for (i, ring) in field.values().chunks(np).enumerate() {
            for (b, &v) in buf.iter_mut().zip(ring) {
                *b = Complex64::new(v, 0.0);
            }
            self.fft_forward
                .process_with_scratch(&mut buf, &mut scratch);
            let w = self.grid.ring_weight(i);
            let lam = self.ring_lambda(i);
            for m in 0..=self.lmax {
                let gm = buf[m % np] * w;
                let base = packed_index(self.lmax, m, m);
                for (o, l) in out[base..base + self.lmax - m + 1]
                    .iter_mut()
                    .zip(&lam[base..base + self.lmax - m + 1])
                {
                    *o += gm * l;
                }
            }
        }
        for ell in 0..=self.lmax {
            out[ell].im = 0.0;
        }
        Ok(HarmonicCoefficients::from_packed(self.lmax, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pseudo_random_alm(lmax: usize, seed: u64) -> HarmonicCoefficients {
        // small LCG: test-only determinism without RNG plumbing
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = HarmonicCoefficients::zeros(lmax);
        for ell in 0..=lmax {
            a.set(ell, 0, Complex64::new(next(), 0.0)).unwrap();
            for m in 1..=ell {
                a.set(ell, m, Complex64::new(next(), next())).unwrap();
            }
        }
        a
    }

    #[test]
    fn lambda_matches_closed_forms() {
        let x = 0.3f64;
        let s = (1.0 - x * x).sqrt();
        let mut lam = vec![0.0; packed_len(2)];
        fill_lambda(2, x, &mut lam);
        let k = 1.0 / (4.0 * PI).sqrt();
        assert!((lam[packed_index(2, 0, 0)] - k).abs() < 1e-15);
        assert!((lam[packed_index(2, 1, 0)] - (3.0f64).sqrt() * k * x).abs() < 1e-15);
        assert!(
            (lam[packed_index(2, 2, 0)] - (5.0f64).sqrt() * k * 0.5 * (3.0 * x * x - 1.0)).abs()
                < 1e-15
        );
        // Y_11 = -√(3/8π) sinθ e^{iφ}
        assert!((lam[packed_index(2, 1, 1)] + (3.0 / (8.0 * PI)).sqrt() * s).abs() < 1e-15);
        // Y_22 = √(15/32π) sin²θ e^{2iφ}
        assert!((lam[packed_index(2, 2, 2)] - (15.0 / (32.0 * PI)).sqrt() * s * s).abs() < 1e-15);
    }

    #[test]
    fn constant_and_dipole_fields() {
        let grid = SphereGrid::new(6, 11).unwrap();
        let t = Transform::new(&grid, 4);
        let mut a = HarmonicCoefficients::zeros(0);
        a.set(0, 0, Complex64::new((4.0 * PI).sqrt(), 0.0)).unwrap();
        let f = t.synthesize(&a).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let mut a = HarmonicCoefficients::zeros(1);
        a.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let f = t.synthesize(&a).unwrap();
        for (n, v) in f.values().iter().enumerate() {
            let (th, _) = grid.node(n);
            assert!((v - (3.0 / (4.0 * PI)).sqrt() * th.cos()).abs() < 1e-14);
        }

        let ones = PixelField::new(6, 11, vec![1.0; grid.len()]);
        let back = t.analyze(&ones).unwrap();
        assert!((back.get(0, 0).re - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(back.total_power() - 4.0 * PI < 1e-12);
    }

    #[test]
    fn round_trip_and_parseval() {
        let lmax = 32;
        let grid = SphereGrid::for_band_limit(lmax);
        let t = Transform::new(&grid, lmax);
        let a = pseudo_random_alm(lmax, 9);
        let f = t.synthesize(&a).unwrap();
        let back = t.analyze(&f).unwrap();
        assert!(back.max_abs_diff(&a) < 1e-10, "{}", back.max_abs_diff(&a));
        let sq: Vec<f64> = f.values().iter().map(|v| v * v).collect();
        let energy = grid.integrate(&sq);
        assert!((energy - a.total_power()).abs() < 1e-10 * a.total_power());
    }

    #[test]
    fn point_evaluation_matches_synthesis() {
        let lmax = 12;
        let grid = SphereGrid::new(14, 27).unwrap();
        let t = Transform::new(&grid, lmax);
        let a = pseudo_random_alm(lmax, 3);
        let f = t.synthesize(&a).unwrap();
        for n in [0, 5, 100, 377] {
            let (th, ph) = grid.node(n);
            assert!((evaluate(&a, th, ph) - f.values()[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn resolution_checks() {
        let grid = SphereGrid::new(8, 15).unwrap();
        let t = Transform::new(&grid, 12);
        let a = pseudo_random_alm(12, 1);
        assert!(matches!(t.synthesize(&a), Err(Error::UnderResolved(_))));
        let f = PixelField::new(8, 15, vec![0.0; grid.len()]);
        assert!(matches!(t.analyze(&f), Err(Error::UnderResolved(_))));
        let t = Transform::new(&grid, 7);
        assert!(t.analyze(&f).is_ok());
        assert!(t.analyze_band(&f, 8).is_err());
    }
}
