use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::real::Real;

/// Per-multipole filter `ℓ ↦ b(ℓ)`.
pub trait Window<T: Real>: Send + Sync {
    /// Squared multiplier `b²(ℓ)`.
    fn b2(&self, ell: usize) -> T;

    /// Inclusive multipole range outside of which `b` vanishes.
    fn support(&self) -> (usize, usize);

    fn multiplier(&self, ell: usize) -> T {
        self.b2(ell).sqrt()
    }
}

const PROFILE_CELLS: usize = 10_000;

/// Tabulated smooth step built from the bump `exp(-1/(1-t²))`:
/// `ψ(u) = ∫_{-1}^u f / ∫_{-1}^1 f`, stored at 10⁴ cells on `[-1, 1]` and
/// evaluated by cubic Hermite interpolation with the exact derivative.
#[derive(Debug)]
pub struct NeedletProfile {
    psi: Vec<f64>,
    norm: f64,
}

fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

impl NeedletProfile {
    fn build() -> Self {
        // 5-point Gauss-Legendre on each cell
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let h = 2.0 / PROFILE_CELLS as f64;
        let mut cum = Vec::with_capacity(PROFILE_CELLS + 1);
        cum.push(0.0);
        let mut acc = crate::real::CompensatedSum::new();
        for k in 0..PROFILE_CELLS {
            let mid = -1.0 + (k as f64 + 0.5) * h;
            let cell: f64 = X
                .iter()
                .zip(W)
                .map(|(x, w)| w * bump(mid + 0.5 * h * x))
                .sum();
            acc.add(0.5 * h * cell);
            cum.push(acc.value());
        }
        let norm = acc.value();
        let psi = cum.into_iter().map(|c| c / norm).collect();
        NeedletProfile { psi, norm }
    }

    pub fn shared() -> &'static NeedletProfile {
        static PROFILE: OnceLock<NeedletProfile> = OnceLock::new();
        PROFILE.get_or_init(NeedletProfile::build)
    }

    /// Smooth step `ψ(u)`, 0 below -1 and 1 above 1.
    pub fn psi(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let h = 2.0 / PROFILE_CELLS as f64;
        let s = (u + 1.0) / h;
        let k = (s.floor() as usize).min(PROFILE_CELLS - 1);
        let t = s - k as f64;
        let (x0, x1) = (-1.0 + k as f64 * h, -1.0 + (k + 1) as f64 * h);
        let (p0, p1) = (self.psi[k], self.psi[k + 1]);
        let (d0, d1) = (bump(x0) / self.norm * h, bump(x1) / self.norm * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * d1
    }

    /// `φ(t)`: 1 on `[0, 1/B]`, decreasing smoothly to 0 at `t = 1`.
    pub fn phi(&self, t: f64, b: f64) -> f64 {
        if t <= 1.0 / b {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            self.psi(1.0 - 2.0 * b / (b - 1.0) * (t - 1.0 / b))
        }
    }

    /// `b²(ξ) = φ(ξ/B) - φ(ξ)`, supported on `(1/B, B)`.
    pub fn b2(&self, xi: f64, b: f64) -> f64 {
        if xi <= 1.0 / b || xi >= b {
            return 0.0;
        }
        (self.phi(xi / b, b) - self.phi(xi, b)).max(0.0)
    }
}

/// Needlet window at scale `j` with bandwidth `B`:
/// `ℓ ↦ b(ℓ/B^j)`, supported on `B^{j-1} < ℓ < B^{j+1}`.
#[derive(Debug, Clone, Copy)]
pub struct NeedletWindow<T> {
    bandwidth: T,
    j: u32,
    support: (usize, usize),
}

impl<T: Real> NeedletWindow<T> {
    pub fn new(bandwidth: T, j: u32) -> Result<Self> {
        let b = bandwidth.to_f64().unwrap_or(f64::NAN);
        if !(b > 1.0) || !b.is_finite() {
            return Err(Error::domain(format!(
                "bandwidth B = {bandwidth} must exceed 1"
            )));
        }
        let profile = NeedletProfile::shared();
        let scale = b.powi(j as i32);
        let lo_start = (b.powi(j as i32 - 1)).floor() as usize + 1;
        let hi_start = (b.powi(j as i32 + 1)).ceil() as usize - 1;
        let nonzero = |ell: usize| profile.b2(ell as f64 / scale, b) > 0.0;
        let lo = (lo_start.max(1)..=hi_start).find(|&l| nonzero(l));
        let hi = lo.and_then(|lo| (lo..=hi_start).rev().find(|&l| nonzero(l)));
        let support = match (lo, hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                return Err(Error::Degenerate(format!(
                    "needlet window B = {b}, j = {j} contains no multipole"
                )))
            }
        };
        Ok(NeedletWindow {
            bandwidth,
            j,
            support,
        })
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// `⌈B^{j+1}⌉`, the smallest spectrum truncation that covers the window.
    pub fn default_ellmax(&self) -> usize {
        let b = self.bandwidth.to_f64().unwrap();
        (b.powi(self.j as i32 + 1) - 1e-9).ceil() as usize
    }
}

impl<T: Real> Window<T> for NeedletWindow<T> {
    fn b2(&self, ell: usize) -> T {
        let b = self.bandwidth.to_f64().unwrap();
        let xi = ell as f64 / b.powi(self.j as i32);
        T::lit(NeedletProfile::shared().b2(xi, b))
    }

    fn support(&self) -> (usize, usize) {
        self.support
    }
}

/// Window given by explicit multipliers `b(0), b(1), …`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitWindow<T> {
    b: Vec<T>,
}

impl<T: Real> ExplicitWindow<T> {
    pub fn new(b: Vec<T>) -> Self {
        ExplicitWindow { b }
    }

    /// `b = 1` at `ℓ_0` only.
    pub fn single(ell0: usize) -> Self {
        let mut b = vec![T::zero(); ell0 + 1];
        b[ell0] = T::one();
        ExplicitWindow { b }
    }
}

impl<T: Real> Window<T> for ExplicitWindow<T> {
    fn b2(&self, ell: usize) -> T {
        self.b.get(ell).map_or(T::zero(), |&v| v * v)
    }

    fn support(&self) -> (usize, usize) {
        let lo = self.b.iter().position(|v| *v != T::zero()).unwrap_or(0);
        let hi = self.b.iter().rposition(|v| *v != T::zero()).unwrap_or(0);
        (lo, hi)
    }
}
