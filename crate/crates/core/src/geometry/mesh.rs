//! Excursion-set estimators on the closed quadrilateral mesh of a grid.
//!
//! Vertices are the grid nodes plus one synthetic vertex per pole. Cells are
//! the quads between consecutive rings (φ periodic) and two triangle fans
//! around the poles. A quad whose corners alternate in/out around the level
//! is split at its center; the center value (exact when harmonic
//! coefficients are supplied, otherwise the saddle value of the bilinear
//! interpolant) decides whether the two excursed corners connect. The
//! Euler characteristic and the boundary curves use the same decision.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use super::critical::{critical_points, morse_euler_characteristic, CriticalPoint};
use super::sphere::{arc, axpy, cross, normalize, to_angles, to_vec, Vec3};
use crate::error::Result;
use crate::simsphere::{evaluate, HarmonicCoefficients, PixelField, SphereGrid};

/// Treatment of quads whose corners alternate in/out around the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaddleRule {
    /// Never connect diagonal corners (faces need all four corners).
    Disconnect,
    /// Connect them when the cell center is in the excursion set.
    #[default]
    CenterValue,
}

/// A field on a grid prepared for excursion-set measurements at any level.
#[derive(Debug, Clone)]
pub struct Excursion<'a> {
    grid: &'a SphereGrid,
    values: &'a [f64],
    exact: Option<&'a HarmonicCoefficients>,
    poles: [f64; 2],
    rule: SaddleRule,
    /// Critical points of the exact field, if they account for χ(S²) = 2.
    critical: OnceLock<Option<Vec<CriticalPoint>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    Ring(usize, usize),
    Meridian(usize, usize),
    Pole(usize, usize),
}

impl<'a> Excursion<'a> {
    /// Pole vertices take the mean of the adjacent ring.
    pub fn new(field: &'a PixelField, grid: &'a SphereGrid) -> Result<Self> {
        field.matches(grid)?;
        let np = grid.n_phi();
        let v = field.values();
        let mean = |ring: usize| v[ring * np..(ring + 1) * np].iter().sum::<f64>() / np as f64;
        Ok(Excursion {
            grid,
            values: v,
            exact: None,
            poles: [mean(0), mean(grid.n_theta() - 1)],
            rule: SaddleRule::default(),
            critical: OnceLock::new(),
        })
    }

    /// Uses the band-limited representation of the same field for pole
    /// values, saddle centers and boundary refinement.
    pub fn with_exact(mut self, alm: &'a HarmonicCoefficients) -> Self {
        self.exact = Some(alm);
        self.critical = OnceLock::new();
        self.poles = [evaluate(alm, 0.0, 0.0), evaluate(alm, PI, 0.0)];
        self
    }

    pub fn with_saddle_rule(mut self, rule: SaddleRule) -> Self {
        self.rule = rule;
        self
    }

    #[inline]
    fn node(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.grid.n_phi() + k % self.grid.n_phi()]
    }

    fn corner_angles(&self, i: usize, k: usize) -> (f64, f64) {
        (self.grid.theta()[i], self.grid.phi(k % self.grid.n_phi()))
    }

    /// Quadrature of the indicator of `{f ≥ u}` over the grid nodes.
    pub fn area(&self, u: f64) -> f64 {
        let np = self.grid.n_phi();
        self.values
            .chunks(np)
            .enumerate()
            .map(|(i, ring)| {
                self.grid.ring_weight(i) * ring.iter().filter(|&&v| v >= u).count() as f64
            })
            .sum()
    }

    /// Corners of quad `(i, k)` in cyclic order:
    /// `(i,k), (i,k+1), (i+1,k+1), (i+1,k)`.
    fn quad(&self, i: usize, k: usize) -> [f64; 4] {
        [
            self.node(i, k),
            self.node(i, k + 1),
            self.node(i + 1, k + 1),
            self.node(i + 1, k),
        ]
    }

    /// Whether an alternating quad connects its excursed corners.
    fn center_in(&self, i: usize, k: usize, c: [f64; 4], u: f64) -> bool {
        match self.rule {
            SaddleRule::Disconnect => false,
            SaddleRule::CenterValue => match self.exact {
                Some(alm) => {
                    let th = 0.5 * (self.grid.theta()[i] + self.grid.theta()[i + 1]);
                    let dphi = TAU / self.grid.n_phi() as f64;
                    evaluate(alm, th, (k as f64 + 0.5) * dphi) >= u
                }
                None => {
                    let [a, b, cc, d] = c.map(|x| x - u);
                    let den = a + cc - b - d;
                    if den == 0.0 {
                        return 0.25 * (a + b + cc + d) >= 0.0;
                    }
                    (a * cc - b * d) / den >= 0.0
                }
            },
        }
    }

    /// Euler characteristic of `{f ≥ u}`. Without exact coefficients this
    /// is `V - E + F` of the excursion sub-complex. With them it is the Morse
    /// count over the field's critical points, which sees components, holes
    /// and necks smaller than a cell; the complex is the fallback when the
    /// critical points found do not sum to χ(S²) = 2.
    pub fn euler_characteristic(&self, u: f64) -> i64 {
        if let Some(alm) = self.exact {
            let points = self.critical.get_or_init(|| {
                critical_points(alm, self.grid)
                    .ok()
                    .filter(|p| morse_euler_characteristic(p, f64::NEG_INFINITY) == 2)
            });
            if let Some(p) = points {
                return morse_euler_characteristic(p, u);
            }
        }
        self.complex_euler_characteristic(u)
    }

    /// `V - E + F` of the excursion sub-complex of the mesh.
    pub fn complex_euler_characteristic(&self, u: f64) -> i64 {
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        let inside = |v: f64| v >= u;
        let mut chi: i64 = 0;
        for i in 0..nt {
            for k in 0..np {
                let a = inside(self.node(i, k));
                if a {
                    chi += 1;
                }
                if a && inside(self.node(i, k + 1)) {
                    chi -= 1;
                }
                if i + 1 < nt && a && inside(self.node(i + 1, k)) {
                    chi -= 1;
                }
            }
        }
        for (p, ring) in [(0usize, 0usize), (1, nt - 1)] {
            if !inside(self.poles[p]) {
                continue;
            }
            chi += 1;
            for k in 0..np {
                let a = inside(self.node(ring, k));
                if a {
                    chi -= 1;
                }
                if a && inside(self.node(ring, k + 1)) {
                    chi += 1;
                }
            }
        }
        for i in 0..nt - 1 {
            for k in 0..np {
                let c = self.quad(i, k);
                let flags = c.map(inside);
                match flags {
                    [true, true, true, true] => chi += 1,
                    [true, false, true, false] | [false, true, false, true] => {
                        if self.center_in(i, k, c, u) {
                            // center vertex joined to the two excursed corners
                            chi -= 1;
                        }
                    }
                    _ => {}
                }
            }
        }
        chi
    }

    fn edge_endpoints(&self, e: EdgeKey) -> ((f64, f64), f64, (f64, f64), f64) {
        let nt = self.grid.n_theta();
        match e {
            EdgeKey::Ring(i, k) => (
                self.corner_angles(i, k),
                self.node(i, k),
                (
                    self.grid.theta()[i],
                    self.grid.phi(k % self.grid.n_phi()) + TAU / self.grid.n_phi() as f64,
                ),
                self.node(i, k + 1),
            ),
            EdgeKey::Meridian(i, k) => (
                self.corner_angles(i, k),
                self.node(i, k),
                self.corner_angles(i + 1, k),
                self.node(i + 1, k),
            ),
            EdgeKey::Pole(p, k) => {
                let ring = if p == 0 { 0 } else { nt - 1 };
                let pole_theta = if p == 0 { 0.0 } else { PI };
                let phi = self.grid.phi(k);
                (
                    (pole_theta, phi),
                    self.poles[p],
                    self.corner_angles(ring, k),
                    self.node(ring, k),
                )
            }
        }
    }

    /// Level crossing on an edge whose endpoints straddle `u`.
    fn crossing(&self, e: EdgeKey, u: f64) -> Vec3 {
        let ((t0, p0), f0, (t1, p1), f1) = self.edge_endpoints(e);
        let at = |s: f64| to_vec(t0 + s * (t1 - t0), p0 + s * (p1 - p0));
        let s_lin = ((u - f0) / (f1 - f0)).clamp(0.0, 1.0);
        match self.exact {
            None => at(s_lin),
            Some(alm) => {
                let g = |s: f64| {
                    let (th, ph) = (t0 + s * (t1 - t0), p0 + s * (p1 - p0));
                    evaluate(alm, th, ph) - u
                };
                at(illinois(g, 0.0, f0 - u, 1.0, f1 - u, s_lin))
            }
        }
    }

    /// Boundary length of `{f ≥ u}` from marching squares (and triangles at
    /// the poles). With exact coefficients, crossings are root-found and
    /// each segment is refined towards the true curve.
    pub fn boundary_length(&self, u: f64) -> f64 {
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        let inside = |v: f64| v >= u;
        let mut cache: HashMap<EdgeKey, Vec3> = HashMap::new();
        let mut point = |e: EdgeKey| *cache.entry(e).or_insert_with(|| self.crossing(e, u));
        let mut total = 0.0;
        let mut add = |a: Vec3, b: Vec3| total += self.segment_length(a, b, u);

        for i in 0..nt - 1 {
            for k in 0..np {
                let c = self.quad(i, k);
                let flags = c.map(inside);
                let edges = [
                    EdgeKey::Ring(i, k),
                    EdgeKey::Meridian(i, (k + 1) % np),
                    EdgeKey::Ring(i + 1, k),
                    EdgeKey::Meridian(i, k),
                ];
                let crossing: Vec<usize> =
                    (0..4).filter(|&j| flags[j] != flags[(j + 1) % 4]).collect();
                match crossing.len() {
                    2 => add(point(edges[crossing[0]]), point(edges[crossing[1]])),
                    4 => {
                        // cut off the corners that are not connected through the center
                        let isolate = !self.center_in(i, k, c, u);
                        for j in 0..4 {
                            if flags[j] == isolate {
                                add(point(edges[(j + 3) % 4]), point(edges[j]));
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        for (p, ring) in [(0usize, 0usize), (1, nt - 1)] {
            let pole_in = inside(self.poles[p]);
            for k in 0..np {
                let a = inside(self.node(ring, k));
                let b = inside(self.node(ring, k + 1));
                let mut ends = Vec::with_capacity(2);
                if pole_in != a {
                    ends.push(EdgeKey::Pole(p, k));
                }
                if a != b {
                    ends.push(EdgeKey::Ring(ring, k));
                }
                if b != pole_in {
                    ends.push(EdgeKey::Pole(p, (k + 1) % np));
                }
                if ends.len() == 2 {
                    add(point(ends[0]), point(ends[1]));
                }
            }
        }
        total
    }

    fn segment_length(&self, a: Vec3, b: Vec3, u: f64) -> f64 {
        match self.exact {
            None => arc(a, b),
            Some(alm) => refine_segment(
                &|p: Vec3| {
                    let (th, ph) = to_angles(p);
                    evaluate(alm, th, ph) - u
                },
                a,
                b,
                1,
            ),
        }
    }
}

/// Illinois-modified regula falsi on `[a, b]` with `ga`, `gb` of opposite
/// signs (zero counts as positive); `start` seeds the first probe.
fn illinois(
    g: impl Fn(f64) -> f64,
    mut a: f64,
    mut ga: f64,
    mut b: f64,
    mut gb: f64,
    start: f64,
) -> f64 {
    let pos = |x: f64| x >= 0.0;
    if pos(ga) == pos(gb) {
        return start;
    }
    let mut x = start.clamp(a, b);
    let mut side = 0i8;
    for _ in 0..40 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if pos(gx) == pos(ga) {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        let prev = x;
        x = (a * gb - b * ga) / (gb - ga);
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        if (x - prev).abs() < 1e-10 * (b - a).abs().max(1e-3) || (b - a).abs() < 1e-12 {
            break;
        }
    }
    x
}

/// Length of the level curve `g = 0` between two of its points: midpoint
/// projection perpendicular to the chord, `depth` times, with a Richardson
/// step on the last level (chord errors scale as the square of the spacing).
fn refine_segment(g: &dyn Fn(Vec3) -> f64, p: Vec3, q: Vec3, depth: u32) -> f64 {
    let chord = arc(p, q);
    if depth == 0 || chord < 1e-9 {
        return chord;
    }
    let Some(m) = project_midpoint(g, p, q, chord) else {
        return chord;
    };
    let two = arc(p, m) + arc(m, q);
    if depth == 1 || (two - chord).abs() <= 1e-6 * chord {
        return two + (two - chord) / 3.0;
    }
    refine_segment(g, p, m, depth - 1) + refine_segment(g, m, q, depth - 1)
}

fn project_midpoint(g: &dyn Fn(Vec3) -> f64, p: Vec3, q: Vec3, chord: f64) -> Option<Vec3> {
    let mid = normalize(axpy(p, 1.0, q));
    let dir = normalize(cross(p, q));
    let along = |s: f64| normalize(axpy(mid, s, dir));
    let g0 = g(mid);
    if g0 == 0.0 {
        return Some(mid);
    }
    for s in [0.125, 0.25, 0.5, 1.0].map(|f| f * chord) {
        for sign in [1.0, -1.0] {
            let gs = g(along(sign * s));
            if (gs >= 0.0) != (g0 >= 0.0) {
                let t = illinois(|t| g(along(sign * s * t)), 0.0, g0, 1.0, gs, g0 / (g0 - gs));
                return Some(along(sign * s * t));
            }
        }
    }
    None
}

pub fn excursion_area(field: &PixelField, grid: &SphereGrid, u: f64) -> Result<f64> {
    Ok(Excursion::new(field, grid)?.area(u))
}

pub fn euler_characteristic(field: &PixelField, grid: &SphereGrid, u: f64) -> Result<i64> {
    Ok(Excursion::new(field, grid)?.euler_characteristic(u))
}

pub fn boundary_length(field: &PixelField, grid: &SphereGrid, u: f64) -> Result<f64> {
    Ok(Excursion::new(field, grid)?.boundary_length(u))
}
