use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes in `cos θ` times equispaced longitudes.
///
/// Rings run from north to south; node `(i, k)` sits at `θ_i`,
/// `φ_k = 2πk / n_phi` and has weight `w_i · 2π / n_phi`. The rule is exact
/// for spherical polynomials of degree `≤ 2 n_theta - 1` in `cos θ` and
/// trigonometric degree `≤ n_phi - 1` in `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    cos_theta: Vec<f64>,
    theta: Vec<f64>,
    ring_weights: Vec<f64>,
}

/// Gauss-Legendre nodes on `[-1, 1]` in descending order, with weights.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 2 {
            return Err(Error::Invalid(format!(
                "grid {n_theta}×{n_phi} too small (need at least 2×2)"
            )));
        }
        let (cos_theta, gl) = gauss_legendre(n_theta);
        let theta = cos_theta.iter().map(|x| x.acos()).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let ring_weights = gl.iter().map(|w| w * dphi).collect();
        Ok(SphereGrid {
            n_theta,
            n_phi,
            cos_theta,
            theta,
            ring_weights,
        })
    }

    /// Smallest grid whose quadrature integrates products of two fields of
    /// band limit `band` exactly (`n_theta = band + 1`, `n_phi = 2 band + 1`).
    pub fn for_band_limit(band: usize) -> Self {
        SphereGrid::new(band + 1, (2 * band + 1).max(2)).expect("valid sizes")
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_phi as f64
    }

    /// Weight shared by every node of ring `i`.
    pub fn ring_weight(&self, i: usize) -> f64 {
        self.ring_weights[i]
    }

    pub fn weight(&self, node: usize) -> f64 {
        self.ring_weights[node / self.n_phi]
    }

    pub fn node(&self, node: usize) -> (f64, f64) {
        (self.theta[node / self.n_phi], self.phi(node % self.n_phi))
    }

    /// Highest total degree `d` such that the product of a degree-`d` field
    /// with any `Y_ℓm`, `ℓ ≤ d`, is integrated exactly.
    pub fn max_analysis_degree(&self) -> usize {
        self.max_product_degree() / 2
    }

    /// Largest `ℓ_f + ℓ` for which products of a band-`ℓ_f` field with
    /// `Y_ℓm` are integrated exactly.
    pub fn max_product_degree(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi - 1)
    }

    /// Quadrature of node values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .chunks(self.n_phi)
            .zip(&self.ring_weights)
            .map(|(ring, w)| w * ring.iter().sum::<f64>())
            .sum()
    }
}
