//! Critical points of a band-limited field and the Morse count of the Euler
//! characteristic of its excursion sets.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::sphere::{arc, axpy, normalize, to_angles, to_vec, Vec3};
use super::sup::{cell_size, eval_at};
use crate::error::Result;
use crate::simsphere::{HarmonicCoefficients, SphereGrid, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Maximum,
    Saddle,
    Minimum,
}

impl CriticalKind {
    /// `(-1)^index` for superlevel sets: extrema count +1, saddles -1.
    pub fn sign(self) -> i64 {
        match self {
            CriticalKind::Saddle => -1,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
    pub kind: CriticalKind,
}

/// Coefficients of `sin θ ∂_θ f` (band limit `lmax + 1`), from
/// `sin θ ∂_θ Y_ℓm = ℓ a_{ℓ+1,m} Y_{ℓ+1,m} − (ℓ+1) a_{ℓm} Y_{ℓ−1,m}` with
/// `a_ℓm = √((ℓ² − m²)/(4ℓ² − 1))`.
pub(crate) fn sin_theta_derivative(alm: &HarmonicCoefficients) -> HarmonicCoefficients {
    let lmax = alm.lmax();
    let a = |l: usize, m: usize| {
        let (l, m) = (l as f64, m as f64);
        ((l * l - m * m) / (4.0 * l * l - 1.0)).sqrt()
    };
    let mut out = HarmonicCoefficients::zeros(lmax + 1);
    for m in 0..=lmax {
        for big_l in m..=lmax + 1 {
            let mut c = Complex64::new(0.0, 0.0);
            if big_l >= 1 && big_l > m {
                c += alm.get(big_l - 1, m as i64) * ((big_l - 1) as f64 * a(big_l, m));
            }
            if big_l < lmax {
                c -= alm.get(big_l + 1, m as i64) * ((big_l + 2) as f64 * a(big_l + 1, m));
            }
            if m == 0 {
                c.im = 0.0;
            }
            out.set(big_l, m, c).expect("m ≤ ℓ");
        }
    }
    out
}

/// Coefficients of `∂_φ f`.
pub(crate) fn phi_derivative(alm: &HarmonicCoefficients) -> HarmonicCoefficients {
    let mut out = HarmonicCoefficients::zeros(alm.lmax());
    for ell in 1..=alm.lmax() {
        for m in 1..=ell {
            let c = alm.get(ell, m as i64);
            out.set(ell, m, Complex64::new(-(m as f64) * c.im, m as f64 * c.re))
                .expect("m ≤ ℓ");
        }
    }
    out
}

/// Critical points of the field with coefficients `alm`, located from sign
/// changes of both gradient components across the cells of `grid` and
/// polished by Newton iterations on exact evaluations. Points inside the
/// polar caps (beyond the first and last rings) are searched from the cap
/// centers.
pub fn critical_points(
    alm: &HarmonicCoefficients,
    grid: &SphereGrid,
) -> Result<Vec<CriticalPoint>> {
    let band = alm.lmax() + 1;
    let t = Transform::new(grid, band);
    let gt = t.synthesize(&sin_theta_derivative(alm).with_lmax(band))?;
    let gp = t.synthesize(&phi_derivative(alm).with_lmax(band))?;
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let idx = |i: usize, k: usize| i * np + k % np;
    let changes = |v: &[f64], c: [usize; 4]| {
        let s = c.map(|n| v[n] >= 0.0);
        s.iter().any(|&b| b != s[0])
    };

    let mut starts: Vec<(Vec3, f64)> = Vec::new();
    for i in 0..nt - 1 {
        for k in 0..np {
            let c = [idx(i, k), idx(i, k + 1), idx(i + 1, k + 1), idx(i + 1, k)];
            if changes(gt.values(), c) && changes(gp.values(), c) {
                let th = 0.5 * (grid.theta()[i] + grid.theta()[i + 1]);
                let ph = (k as f64 + 0.5) * TAU / np as f64;
                starts.push((to_vec(th, ph), cell_size(grid, i)));
            }
        }
    }
    for pole in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
        starts.push((pole, cell_size(grid, 0)));
    }

    let mut found: Vec<(Vec3, CriticalPoint)> = Vec::new();
    for (start, h) in starts {
        let Some((p, value, kind)) = newton(alm, start, h) else {
            continue;
        };
        if arc(p, start) > 3.0 * h || found.iter().any(|(q, _)| arc(*q, p) < 1e-7) {
            continue;
        }
        let (theta, phi) = to_angles(p);
        found.push((
            p,
            CriticalPoint {
                theta,
                phi,
                value,
                kind,
            },
        ));
    }
    let mut out: Vec<CriticalPoint> = found.into_iter().map(|(_, c)| c).collect();
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(out)
}

fn tangent_basis(c: Vec3) -> (Vec3, Vec3) {
    // any orthonormal pair works; avoid the φ frame's pole singularity
    let helper = if c[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = normalize(super::sphere::cross(helper, c));
    (e1, super::sphere::cross(c, e1))
}

/// Newton iteration for `∇f = 0` with finite-difference derivatives on a
/// small tangent stencil.
fn newton(alm: &HarmonicCoefficients, start: Vec3, h: f64) -> Option<(Vec3, f64, CriticalKind)> {
    let d = (1e-3 * h).max(1e-6);
    let mut c = start;
    for _ in 0..30 {
        let (ex, ey) = tangent_basis(c);
        let at = |x: f64, y: f64| eval_at(alm, normalize(axpy(axpy(c, x, ex), y, ey)));
        let f0 = at(0.0, 0.0);
        let (fxp, fxm, fyp, fym) = (at(d, 0.0), at(-d, 0.0), at(0.0, d), at(0.0, -d));
        let fx = (fxp - fxm) / (2.0 * d);
        let fy = (fyp - fym) / (2.0 * d);
        let fxx = (fxp - 2.0 * f0 + fxm) / (d * d);
        let fyy = (fyp - 2.0 * f0 + fym) / (d * d);
        let fxy = (at(d, d) - at(d, -d) - at(-d, d) + at(-d, -d)) / (4.0 * d * d);
        let det = fxx * fyy - fxy * fxy;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let (mut dx, mut dy) = ((-fyy * fx + fxy * fy) / det, (fxy * fx - fxx * fy) / det);
        let len = dx.hypot(dy);
        if len > h {
            dx *= h / len;
            dy *= h / len;
        }
        c = normalize(axpy(axpy(c, dx, ex), dy, ey));
        if len < 1e-10 {
            let kind = if det < 0.0 {
                CriticalKind::Saddle
            } else if fxx < 0.0 {
                CriticalKind::Maximum
            } else {
                CriticalKind::Minimum
            };
            return Some((c, eval_at(alm, c), kind));
        }
        if arc(c, start) > 4.0 * h {
            return None;
        }
    }
    None
}

/// `χ({f ≥ u}) = #max − #saddles + #min` over critical values `≥ u`.
pub fn morse_euler_characteristic(points: &[CriticalPoint], u: f64) -> i64 {
    points
        .iter()
        .filter(|c| c.value >= u)
        .map(|c| c.kind.sign())
        .sum()
}
