//! Monte Carlo harnesses: empirical LKCs, sup exceedance and fourth
//! cumulants against their closed forms.
//!
//! Replicates run on a rayon pool (size from `SPHEX_THREADS`, default all
//! cores) and are reduced in replicate order, so reports do not depend on
//! the number of workers.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use super::{sup_estimate, Excursion, SaddleRule};
use crate::error::{Error, Result};
use crate::lkc::{excursion_prob_approx, expected_lkc_gaussian};
use crate::simsphere::{
    stream, GaussianSampler, GjqPipeline, HarmonicCoefficients, PixelField, RngKey, SphereGrid,
};

pub const THREADS_ENV: &str = "SPHEX_THREADS";

/// Minimum replicates for a trustworthy fourth-moment estimate.
pub const CUMULANT_MIN_REPLICATES: usize = 5000;

/// A unit-variance isotropic field that can be drawn on its grid.
pub trait FieldModel: Sync {
    fn grid(&self) -> &SphereGrid;
    /// Second spectral moment of the unit-variance field.
    fn lambda(&self) -> Result<f64>;
    /// Realization on the grid plus its exact harmonic coefficients.
    fn realize(&self, key: RngKey) -> Result<(PixelField, HarmonicCoefficients)>;
}

impl FieldModel for GaussianSampler {
    fn grid(&self) -> &SphereGrid {
        GaussianSampler::grid(self)
    }

    fn lambda(&self) -> Result<f64> {
        let (num, den) = self
            .cl()
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(n, d), (l, c)| {
                let w = (2 * l + 1) as f64 * c;
                (n + w * (l * (l + 1)) as f64 / 2.0, d + w)
            });
        if !(den > 0.0) {
            return Err(Error::Degenerate("spectrum carries no variance".into()));
        }
        Ok(num / den)
    }

    /// Rescaled to unit variance.
    fn realize(&self, key: RngKey) -> Result<(PixelField, HarmonicCoefficients)> {
        let (f, alm) = self.sample(key)?;
        let s = self.variance().sqrt();
        if !(s > 0.0) {
            return Err(Error::Degenerate("spectrum carries no variance".into()));
        }
        Ok((f.map(|v| v / s), alm.filter(|_| 1.0 / s)))
    }
}

impl FieldModel for GjqPipeline {
    fn grid(&self) -> &SphereGrid {
        GjqPipeline::grid(self)
    }

    fn lambda(&self) -> Result<f64> {
        self.spectrum().lambda()
    }

    fn realize(&self, key: RngKey) -> Result<(PixelField, HarmonicCoefficients)> {
        let r = GjqPipeline::realize(self, key)?;
        self.normalized(&r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    /// Use the exact coefficients for pole values, saddles, boundary
    /// refinement and sup refinement.
    pub exact_geometry: bool,
    pub saddle_rule: SaddleRule,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            exact_geometry: true,
            saddle_rule: SaddleRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub level: f64,
    pub stat: String,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub theory: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub rows: Vec<McRow>,
    pub replicates: usize,
    pub seed: u64,
    pub grid: (usize, usize),
    pub lambda: f64,
    pub config_hash: Option<String>,
    pub notes: Vec<String>,
}

impl McReport {
    pub fn get(&self, level: f64, stat: &str) -> Option<&McRow> {
        self.rows
            .iter()
            .find(|r| r.level == level && r.stat == stat)
    }

    pub fn levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.level) {
                out.push(r.level);
            }
        }
        out
    }

    /// `(mean_g − mean_f) / √(se_g² + se_f²)` for `g.<stat>` and `f.<stat>`.
    pub fn pooled_z(&self, level: f64, stat: &str) -> Option<f64> {
        let g = self.get(level, &format!("g.{stat}"))?;
        let f = self.get(level, &format!("f.{stat}"))?;
        let se = g.mc_se.hypot(f.mc_se);
        let diff = g.mc_mean - f.mc_mean;
        Some(if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        })
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    /// Header `level,stat,mc_mean,mc_se,theory,z`; absent values are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["level", "stat", "mc_mean", "mc_se", "theory", "z"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                r.level.to_string(),
                r.stat.clone(),
                r.mc_mean.to_string(),
                r.mc_se.to_string(),
                opt(r.theory),
                opt(r.z),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "config_hash = {h}");
        }
        let _ = writeln!(s, "grid = {}x{}", self.grid.0, self.grid.1);
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        for n in &self.notes {
            let _ = writeln!(s, "note = {n}");
        }
        s
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::Invalid(format!(
                "{THREADS_ENV} must be a non-negative integer, got {v:?}"
            ))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))
}

/// Per-replicate stat vectors, in replicate order.
fn run<F>(replicates: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync + Send,
{
    pool()?.install(|| (0..replicates as u64).into_par_iter().map(&f).collect())
}

fn mean_se(xs: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, f64::NAN);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn z_score(mean: f64, se: f64, theory: f64) -> Option<f64> {
    let d = mean - theory;
    if se > 0.0 {
        Some(d / se)
    } else if d == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Columns `stats[c]` at each level; `samples[r][level * stats.len() + c]`.
fn reduce(
    levels: &[f64],
    stats: &[(String, Theory<'_>)],
    samples: &[Vec<f64>],
) -> Result<Vec<McRow>> {
    let mut rows = Vec::with_capacity(levels.len() * stats.len());
    for (li, &u) in levels.iter().enumerate() {
        for (c, (name, theory)) in stats.iter().enumerate() {
            let idx = li * stats.len() + c;
            let (mean, se) = mean_se(samples.iter().map(|s| s[idx]));
            let theory = theory.as_ref().map(|t| t(u)).transpose()?;
            rows.push(McRow {
                level: u,
                stat: name.clone(),
                mc_mean: mean,
                mc_se: se,
                theory,
                z: theory.and_then(|t| z_score(mean, se, t)),
            });
        }
    }
    Ok(rows)
}

fn check_run(levels: &[f64], replicates: usize, min: usize) -> Result<()> {
    if replicates < min {
        return Err(Error::domain(format!(
            "need at least {min} replicates, got {replicates}"
        )));
    }
    if levels.is_empty() || levels.iter().any(|u| !u.is_finite()) {
        return Err(Error::domain(
            "levels must be a non-empty list of finite values",
        ));
    }
    Ok(())
}

type Theory<'a> = Option<Box<dyn Fn(f64) -> Result<f64> + 'a>>;

/// Empirical EC, boundary length and area of `model` (prefix `g.`) and of
/// an optional Gaussian `surrogate` (prefix `f.`), against the Gaussian
/// kinematic formula at the model's second spectral moment.
pub fn mc_validate_lkcs(
    model: &dyn FieldModel,
    surrogate: Option<&dyn FieldModel>,
    levels: &[f64],
    replicates: usize,
    seed: u64,
    opts: McOptions,
) -> Result<McReport> {
    check_run(levels, replicates, 50)?;
    let lambda = model.lambda()?;
    let sources: Vec<(&str, &dyn FieldModel, u64)> = std::iter::once(("g", model, stream::FIELD))
        .chain(surrogate.map(|s| ("f", s, stream::SURROGATE)))
        .collect();

    let mut stats: Vec<(String, Theory)> = Vec::new();
    for (prefix, _, _) in &sources {
        stats.push((
            format!("{prefix}.euler_char"),
            Some(Box::new(move |u| Ok(expected_lkc_gaussian(u, lambda)?.l0))),
        ));
        stats.push((
            format!("{prefix}.boundary_length"),
            Some(Box::new(move |u| {
                Ok(expected_lkc_gaussian(u, lambda)?.boundary_length())
            })),
        ));
        stats.push((
            format!("{prefix}.area"),
            Some(Box::new(move |u| Ok(expected_lkc_gaussian(u, lambda)?.l2))),
        ));
    }

    let samples = run(replicates, |rep| {
        let mut per_source = Vec::with_capacity(sources.len());
        for &(_, m, s) in &sources {
            let (field, alm) = m.realize(RngKey::new(seed, rep, s))?;
            let mut ex = Excursion::new(&field, m.grid())?.with_saddle_rule(opts.saddle_rule);
            if opts.exact_geometry {
                ex = ex.with_exact(&alm);
            }
            per_source.push(
                levels
                    .iter()
                    .map(|&u| {
                        [
                            ex.euler_characteristic(u) as f64,
                            ex.boundary_length(u),
                            ex.area(u),
                        ]
                    })
                    .collect::<Vec<_>>(),
            );
        }
        Ok(levels
            .iter()
            .enumerate()
            .flat_map(|(li, _)| per_source.iter().flat_map(move |p| p[li]))
            .collect())
    })?;

    let g = model.grid();
    Ok(McReport {
        rows: reduce(levels, &stats, &samples)?,
        replicates,
        seed,
        grid: (g.n_theta(), g.n_phi()),
        lambda,
        config_hash: None,
        notes: vec![],
    })
}

/// Empirical `P(sup > u)` with the refined sup (`*.sup_exceed`) and the raw
/// grid maximum (`*.sup_exceed_grid`), against
/// `2(1 − Φ(u)) + 2uφ(u)λ`.
pub fn mc_sup_probability(
    model: &dyn FieldModel,
    surrogate: Option<&dyn FieldModel>,
    levels: &[f64],
    replicates: usize,
    seed: u64,
    opts: McOptions,
) -> Result<McReport> {
    check_run(levels, replicates, 1)?;
    let lambda = model.lambda()?;
    let sources: Vec<(&str, &dyn FieldModel, u64)> = std::iter::once(("g", model, stream::FIELD))
        .chain(surrogate.map(|s| ("f", s, stream::SURROGATE)))
        .collect();
    let mut stats: Vec<(String, Theory)> = Vec::new();
    for (prefix, _, _) in &sources {
        stats.push((
            format!("{prefix}.sup_exceed"),
            Some(Box::new(move |u| excursion_prob_approx(u, lambda))),
        ));
        stats.push((format!("{prefix}.sup_exceed_grid"), None));
    }

    let samples = run(replicates, |rep| {
        let mut sups = Vec::with_capacity(sources.len());
        for &(_, m, s) in &sources {
            let (field, alm) = m.realize(RngKey::new(seed, rep, s))?;
            let est = sup_estimate(&field, m.grid(), opts.exact_geometry.then_some(&alm))?;
            sups.push(est);
        }
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        Ok(levels
            .iter()
            .flat_map(|&u| {
                sups.iter()
                    .flat_map(move |e| [ind(e.refined > u), ind(e.grid_max > u)])
            })
            .collect())
    })?;

    let g = model.grid();
    let mut notes = vec!["sup = grid maximum refined by local quadratic fits".to_string()];
    for (prefix, _, _) in &sources {
        let gap: f64 = levels
            .iter()
            .filter_map(|&u| {
                let a = mean_se_row(&stats, &samples, levels, u, &format!("{prefix}.sup_exceed"))?;
                let b = mean_se_row(
                    &stats,
                    &samples,
                    levels,
                    u,
                    &format!("{prefix}.sup_exceed_grid"),
                )?;
                Some(a - b)
            })
            .fold(0.0, f64::max);
        notes.push(format!(
            "{prefix}: largest refinement shift in exceedance probability {gap}"
        ));
    }
    Ok(McReport {
        rows: reduce(levels, &stats, &samples)?,
        replicates,
        seed,
        grid: (g.n_theta(), g.n_phi()),
        lambda,
        config_hash: None,
        notes,
    })
}

fn mean_se_row(
    stats: &[(String, Theory)],
    samples: &[Vec<f64>],
    levels: &[f64],
    u: f64,
    name: &str,
) -> Option<f64> {
    let li = levels.iter().position(|&l| l == u)?;
    let c = stats.iter().position(|(n, _)| n == name)?;
    Some(mean_se(samples.iter().map(|s| s[li * stats.len() + c])).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantRow {
    pub j: u32,
    pub k2: f64,
    pub k4: f64,
    /// `k4 / k2²`.
    pub cum4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTable {
    pub rows: Vec<CumulantRow>,
    pub bandwidth: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Least-squares slope of `ln|cum4|` against `j`.
    pub slope: f64,
    pub warning: Option<String>,
}

impl CumulantTable {
    /// Slope in units of `ln B` (the bound predicts −2).
    pub fn rate(&self) -> f64 {
        self.slope / self.bandwidth.ln()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["j", "k2", "k4", "cum4"])?;
        for r in &self.rows {
            out.write_record([
                r.j.to_string(),
                r.k2.to_string(),
                r.k4.to_string(),
                r.cum4.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Unbiased second and fourth cumulants (k-statistics).
fn k_statistics(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = (x - mean) * (x - mean);
        (a + d, b + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    let k2 = n / (n - 1.0) * m2;
    let k4 =
        n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    (k2, k4)
}

/// Normalized fourth cumulant of `g_{j;q}` at the north pole for each
/// `(j, pipeline)`, and the slope of `ln|cum4|` against `j`.
pub fn mc_cumulant_decay(
    pipelines: &[(u32, &GjqPipeline)],
    bandwidth: f64,
    replicates: usize,
    seed: u64,
) -> Result<CumulantTable> {
    if pipelines.len() < 3 {
        return Err(Error::domain("need at least three scales"));
    }
    if replicates < 4 {
        return Err(Error::domain("need at least four replicates"));
    }
    if !(bandwidth > 1.0) {
        return Err(Error::domain("bandwidth must exceed 1"));
    }
    let pole = |alm: &HarmonicCoefficients| {
        (0..=alm.lmax())
            .map(|l| alm.get(l, 0).re * ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt())
            .sum::<f64>()
    };
    let mut rows = Vec::with_capacity(pipelines.len());
    for &(j, p) in pipelines {
        let xs: Vec<f64> = run(replicates, |rep| {
            Ok(vec![pole(&p.realize_alm(RngKey::new(
                seed,
                rep,
                stream::FIELD,
            ))?)])
        })?
        .into_iter()
        .map(|v| v[0])
        .collect();
        let (k2, k4) = k_statistics(&xs);
        rows.push(CumulantRow {
            j,
            k2,
            k4,
            cum4: k4 / (k2 * k2),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.j as f64, r.cum4.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let warning = (replicates < CUMULANT_MIN_REPLICATES).then(|| {
        format!("{replicates} replicates is below {CUMULANT_MIN_REPLICATES}; fourth-moment estimates are unstable")
    });
    Ok(CumulantTable {
        rows,
        bandwidth,
        replicates,
        seed,
        slope: sxy / sxx,
        warning,
    })
}
