//! Supremum of a sampled field: grid maximum plus local quadratic refinement
//! around the leading local maxima.

use std::f64::consts::TAU;

use super::sphere::{axpy, normalize, to_angles, to_vec, Vec3};
use crate::error::Result;
use crate::simsphere::{evaluate, HarmonicCoefficients, PixelField, SphereGrid};

/// Local maxima examined by the refinement pass.
const CANDIDATES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimate {
    pub grid_max: f64,
    pub refined: f64,
    /// `(θ, φ)` of the refined maximum.
    pub location: (f64, f64),
}

impl SupEstimate {
    pub fn bias_correction(&self) -> f64 {
        self.refined - self.grid_max
    }
}

/// Grid maximum, refined by a quadratic fit on the 3×3 stencil around each
/// of the largest local maxima. With `exact` coefficients the fit is
/// iterated on shrinking stencils of exact evaluations.
pub fn sup_estimate(
    field: &PixelField,
    grid: &SphereGrid,
    exact: Option<&HarmonicCoefficients>,
) -> Result<SupEstimate> {
    field.matches(grid)?;
    let np = grid.n_phi();
    let v = field.values();
    let at = |i: usize, k: isize| v[i * np + k.rem_euclid(np as isize) as usize];
    let mut maxima = local_maxima(v, grid);
    maxima.truncate(CANDIDATES);
    let &(grid_max, i0, k0) = maxima.first().expect("grid has nodes");

    let mut best = SupEstimate {
        grid_max,
        refined: grid_max,
        location: (grid.theta()[i0], grid.phi(k0)),
    };
    for &(value, i, k) in &maxima {
        let cand = match exact {
            Some(alm) => Some(refine_peak(
                |p| eval_at(alm, p),
                to_vec(grid.theta()[i], grid.phi(k)),
                cell_size(grid, i),
            )),
            None => refine_grid(grid, &at, i, k).map(|(t, p, f)| (f, (t, p))),
        };
        if let Some((f, loc)) = cand {
            if f > best.refined && f.is_finite() && f < value + (value.abs() + 1.0) {
                best.refined = f;
                best.location = loc;
            }
        }
    }
    Ok(best)
}

/// Nodes no smaller than their (up to) eight neighbours, largest first, as
/// `(value, ring, k)`. Ring neighbours wrap in φ; the poles are not nodes.
fn local_maxima(values: &[f64], grid: &SphereGrid) -> Vec<(f64, usize, usize)> {
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let at = |i: usize, k: isize| values[i * np + k.rem_euclid(np as isize) as usize];
    let mut maxima = Vec::new();
    for i in 0..nt {
        for k in 0..np {
            let c = values[i * np + k];
            let is_max = (i.saturating_sub(1)..=(i + 1).min(nt - 1)).all(|ii| {
                (-1..=1isize).all(|dk| (ii == i && dk == 0) || at(ii, k as isize + dk) <= c)
            });
            if is_max {
                maxima.push((c, i, k));
            }
        }
    }
    maxima.sort_by(|a, b| b.0.total_cmp(&a.0));
    maxima
}

/// Half the larger of the ring and meridian spacings at ring `i`.
pub(crate) fn cell_size(grid: &SphereGrid, i: usize) -> f64 {
    let t = grid.theta();
    let dtheta = if i + 1 < t.len() {
        t[i + 1] - t[i]
    } else {
        t[i] - t[i - 1]
    };
    0.5 * dtheta.max(TAU / grid.n_phi() as f64)
}

pub(crate) fn eval_at(alm: &HarmonicCoefficients, p: Vec3) -> f64 {
    let (t, ph) = to_angles(p);
    evaluate(alm, t, ph)
}

/// One Newton step of the quadratic through the grid stencil, on the
/// non-uniform ring spacing. Needs both neighbouring rings.
fn refine_grid(
    grid: &SphereGrid,
    at: &impl Fn(usize, isize) -> f64,
    i: usize,
    k: usize,
) -> Option<(f64, f64, f64)> {
    if i == 0 || i + 1 >= grid.n_theta() {
        return None;
    }
    let t = grid.theta();
    let (hm, hp) = (t[i] - t[i - 1], t[i + 1] - t[i]);
    let hy = t[i].sin() * TAU / grid.n_phi() as f64;
    let k = k as isize;
    let f = |di: isize, dk: isize| at((i as isize + di) as usize, k + dk);
    let f0 = f(0, 0);
    let den = hm * hp * (hm + hp);
    let fx = (hm * hm * f(1, 0) - hp * hp * f(-1, 0) + (hp * hp - hm * hm) * f0) / den;
    let fxx = 2.0 * (hm * f(1, 0) + hp * f(-1, 0) - (hm + hp) * f0) / den;
    let fy = (f(0, 1) - f(0, -1)) / (2.0 * hy);
    let fyy = (f(0, 1) - 2.0 * f0 + f(0, -1)) / (hy * hy);
    let fxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (2.0 * (hm + hp) * hy);
    let (dx, dy) = newton_step(fx, fy, fxx, fxy, fyy)?;
    if dx.abs() > hm.max(hp) || dy.abs() > hy {
        return None;
    }
    let value = f0 + 0.5 * (fx * dx + fy * dy);
    Some((t[i] + dx, grid.phi(k as usize) + dy / t[i].sin(), value))
}

/// Maximizer step `-H⁻¹g` of a quadratic; `None` unless `H` is negative
/// definite.
fn newton_step(fx: f64, fy: f64, fxx: f64, fxy: f64, fyy: f64) -> Option<(f64, f64)> {
    let det = fxx * fyy - fxy * fxy;
    if !(fxx < 0.0 && det > 0.0) {
        return None;
    }
    Some(((-fyy * fx + fxy * fy) / det, (fxy * fx - fxx * fy) / det))
}

/// Orthonormal tangent basis at `c`.
fn tangent_basis(c: Vec3) -> (Vec3, Vec3) {
    let (th, ph) = to_angles(c);
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    ([ct * cp, ct * sp, -st], [-sp, cp, 0.0])
}

/// Local maximum of `eval` near `start` by Newton steps on quadratic fits
/// over shrinking tangent-plane stencils; returns `(value, (θ, φ))`.
fn refine_peak(eval: impl Fn(Vec3) -> f64, start: Vec3, mut h: f64) -> (f64, (f64, f64)) {
    let mut c = start;
    let mut best = (eval(c), to_angles(c));
    for _ in 0..8 {
        let (ex, ey) = tangent_basis(c);
        let at = |x: f64, y: f64| eval(normalize(axpy(axpy(c, x, ex), y, ey)));
        let f0 = at(0.0, 0.0);
        let (fxp, fxm, fyp, fym) = (at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h));
        let fx = (fxp - fxm) / (2.0 * h);
        let fy = (fyp - fym) / (2.0 * h);
        let fxx = (fxp - 2.0 * f0 + fxm) / (h * h);
        let fyy = (fyp - 2.0 * f0 + fym) / (h * h);
        let fxy = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
        let Some((mut dx, mut dy)) = newton_step(fx, fy, fxx, fxy, fyy) else {
            break;
        };
        let len = dx.hypot(dy);
        if len > 2.0 * h {
            dx *= 2.0 * h / len;
            dy *= 2.0 * h / len;
        }
        c = normalize(axpy(axpy(c, dx, ex), dy, ey));
        let f = eval(c);
        if f > best.0 {
            best = (f, to_angles(c));
        }
        if len < 1e-10 {
            break;
        }
        h = (0.5 * h).min(len.max(1e-5));
    }
    best
}
