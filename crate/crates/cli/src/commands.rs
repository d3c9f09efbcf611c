use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use sphere_excursion::geometry::mc::CUMULANT_MIN_REPLICATES;
use sphere_excursion::geometry::{
    self, mc_cumulant_decay, mc_sup_probability, mc_validate_lkcs, FieldModel, McOptions, McReport,
};
use sphere_excursion::lkc::{excursion_prob_approx, expected_lkc_gaussian};
use sphere_excursion::simsphere::{io, stream, GaussianSampler, GjqPipeline, RngKey, SphereGrid};
use sphere_excursion::spectra::{spectral_moment, transformed_spectrum, Window};
use sphere_excursion::{NeedletWindow, PowerSpectrum, SmoothingKernel, VERSION};

use crate::config::RunConfig;
use crate::CliError;

const DEFAULT_LEVELS: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];

/// Output directory for one command; every file carries the config hash.
pub struct Output {
    dir: PathBuf,
    hash: String,
    command: &'static str,
}

impl Output {
    pub fn create(cfg: &RunConfig, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output)?;
        let out = Output {
            dir: cfg.output.clone(),
            hash: cfg.hash(),
            command,
        };
        fs::write(out.dir.join("config.toml"), cfg.canonical())?;
        Ok(out)
    }

    fn trailer(&self) -> String {
        format!("# sphex {VERSION} config {}\n", self.hash)
    }

    /// Writes `name` with the body produced by `fill`, then the trailer.
    fn csv(
        &self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        buf.extend_from_slice(self.trailer().as_bytes());
        fs::write(self.dir.join(name), buf)?;
        Ok(())
    }

    /// `body` from a Monte Carlo report already names the seed and hash.
    fn manifest(&self, cfg: &RunConfig, body: &str) -> Result<(), CliError> {
        let mut s = String::new();
        let _ = writeln!(s, "sphex = {VERSION}");
        let _ = writeln!(s, "command = {}", self.command);
        if !body.contains("config_hash = ") {
            let _ = writeln!(s, "config_hash = {}", self.hash);
            let _ = writeln!(s, "seed = {}", cfg.seed);
        }
        let _ = writeln!(s, "q = {}", cfg.q);
        s.push_str(body);
        fs::write(self.dir.join("manifest.txt"), s)?;
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

/// Kernel as configured, or the flat kernel keeping the whole band of `H_q`.
fn effective_kernel(cfg: &RunConfig, w: &NeedletWindow) -> Result<SmoothingKernel, CliError> {
    Ok(cfg
        .kernel()?
        .unwrap_or_else(|| SmoothingKernel::flat(cfg.q * w.support().1)))
}

fn levels(cfg: &RunConfig) -> Vec<f64> {
    if cfg.levels.is_empty() {
        DEFAULT_LEVELS.to_vec()
    } else {
        cfg.levels.clone()
    }
}

/// The field under study: the filtered Gaussian field itself when `q = 1`
/// without a kernel, otherwise the subordinated pipeline.
enum Model {
    Gaussian(GaussianSampler),
    Pipeline(Box<GjqPipeline>),
}

impl Model {
    fn build(cfg: &RunConfig, w: &NeedletWindow, spec: &PowerSpectrum) -> Result<Self, CliError> {
        let band = w.support().1;
        if cfg.q == 1 && cfg.kernel.is_none() {
            let grid = cfg.grid_for(band, band)?;
            return Ok(Model::Gaussian(GaussianSampler::filtered(spec, w, &grid)?));
        }
        let k = effective_kernel(cfg, w)?;
        let out = k.l_k().min(cfg.q * band);
        let grid = cfg.grid_for(band, out)?;
        Ok(Model::Pipeline(Box::new(GjqPipeline::new(
            spec, w, &k, cfg.q, &grid,
        )?)))
    }

    fn field(&self) -> &dyn FieldModel {
        match self {
            Model::Gaussian(g) => g,
            Model::Pipeline(p) => p.as_ref(),
        }
    }

    fn surrogate(&self, cfg: &RunConfig) -> Result<Option<GaussianSampler>, CliError> {
        match self {
            Model::Pipeline(p) if cfg.mc.surrogate => Ok(Some(p.surrogate_sampler()?)),
            _ => Ok(None),
        }
    }
}

fn setup(cfg: &RunConfig) -> Result<(NeedletWindow, PowerSpectrum), CliError> {
    let w = cfg.window()?;
    let spec = cfg.spectrum_for(&w)?;
    Ok((w, spec))
}

fn lambda(cfg: &RunConfig, w: &NeedletWindow, spec: &PowerSpectrum) -> Result<f64, CliError> {
    if cfg.q == 1 && cfg.kernel.is_none() {
        return Ok(spectral_moment(w, spec)?);
    }
    let k = effective_kernel(cfg, w)?;
    Ok(transformed_spectrum(cfg.q, w, spec, &k)?.lambda()?)
}

pub fn spectra(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (w, spec) = setup(cfg)?;
    let k = effective_kernel(cfg, &w)?;
    let ts = transformed_spectrum(cfg.q, &w, &spec, &k)?;
    let top = spec.ellmax().max(ts.ellmax());
    out.csv("spectra.csv", |buf| {
        let mut wr = csv_writer(buf);
        wr.write_record(["ell", "cl", "b2", "kappa2", "cl_jq"])?;
        for ell in 0..=top {
            // input spectra start at ℓ = 1
            let cl = if ell == 0 || ell > spec.ellmax() {
                0.0
            } else {
                spec.eval(ell)?
            };
            let kap = k.kappa(ell);
            let cl_jq = if ell <= ts.ellmax() {
                ts.value(ell)
            } else {
                0.0
            };
            wr.write_record([
                ell.to_string(),
                cl.to_string(),
                w.b2(ell).to_string(),
                (kap * kap).to_string(),
                cl_jq.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    })?;
    let mut body = String::new();
    let (lo, hi) = w.support();
    let _ = writeln!(body, "window_support = {lo}..={hi}");
    let _ = writeln!(body, "L_K = {}", k.l_k());
    let _ = writeln!(body, "variance = {}", ts.variance());
    let _ = writeln!(
        body,
        "variance_without_monopole = {}",
        ts.variance_without_monopole()
    );
    if k.l_k() >= cfg.q * hi && (0..=k.l_k()).all(|l| k.kappa(l) == 1.0) {
        let fact: f64 = (1..=cfg.q).map(|i| i as f64).product();
        let _ = writeln!(body, "variance_expected = {fact}");
    }
    match ts.lambda() {
        Ok(l) => {
            let _ = writeln!(body, "lambda = {l}");
        }
        Err(e) => {
            let _ = writeln!(body, "lambda = undefined ({e})");
        }
    }
    out.manifest(cfg, &body)
}

pub fn lkc_theory(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (w, spec) = setup(cfg)?;
    let lam = lambda(cfg, &w, &spec)?;
    out.csv("lkc_theory.csv", |buf| {
        let mut wr = csv_writer(buf);
        wr.write_record(["u", "l0", "l1", "l2", "len", "exc_prob"])?;
        for u in levels(cfg) {
            let t = expected_lkc_gaussian(u, lam)?;
            wr.write_record([
                u.to_string(),
                t.l0.to_string(),
                t.l1.to_string(),
                t.l2.to_string(),
                t.boundary_length().to_string(),
                excursion_prob_approx(u, lam)?.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    })?;
    out.manifest(cfg, &format!("lambda = {lam}\n"))
}

pub fn simulate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (w, spec) = setup(cfg)?;
    let model = Model::build(cfg, &w, &spec)?;
    let m = model.field();
    let grid = m.grid();
    let (field, alm) = m.realize(RngKey::new(cfg.seed, 0, stream::FIELD))?;
    io::write_binary(&field, fs::File::create(out.path("field.bin"))?)?;
    let exact = cfg.mc.exact_geometry.then_some(&alm);
    out.csv("summary.csv", |buf| {
        let mut wr = csv_writer(buf);
        wr.write_record([
            "level",
            "area",
            "boundary_length",
            "euler_char",
            "sup_value",
        ])?;
        for u in levels(cfg) {
            let s = geometry::summarize(&field, grid, exact, u)?;
            wr.write_record([
                u.to_string(),
                s.area.to_string(),
                s.boundary_length.to_string(),
                s.euler_char.to_string(),
                s.sup_value.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    })?;
    out.manifest(cfg, &grid_lines(grid, m.lambda()?))
}

fn grid_lines(grid: &SphereGrid, lambda: f64) -> String {
    format!(
        "grid = {}x{}\nlambda = {lambda}\n",
        grid.n_theta(),
        grid.n_phi()
    )
}

fn report(cfg: &RunConfig, out: &Output, name: &str, r: McReport) -> Result<(), CliError> {
    let r = r.with_config_hash(out.hash.clone());
    out.csv(name, |buf| Ok(r.write_csv(buf)?))?;
    out.manifest(cfg, &r.manifest())
}

fn options(cfg: &RunConfig) -> McOptions {
    McOptions {
        exact_geometry: cfg.mc.exact_geometry,
        ..McOptions::default()
    }
}

pub fn mc_validate(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (w, spec) = setup(cfg)?;
    let model = Model::build(cfg, &w, &spec)?;
    let sur = model.surrogate(cfg)?;
    let r = mc_validate_lkcs(
        model.field(),
        sur.as_ref().map(|s| s as &dyn FieldModel),
        &levels(cfg),
        cfg.replicates_or(200),
        cfg.seed,
        options(cfg),
    )?;
    report(cfg, out, "mc_validate.csv", r)
}

pub fn mc_sup(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (w, spec) = setup(cfg)?;
    let model = Model::build(cfg, &w, &spec)?;
    let sur = model.surrogate(cfg)?;
    let r = mc_sup_probability(
        model.field(),
        sur.as_ref().map(|s| s as &dyn FieldModel),
        &levels(cfg),
        cfg.replicates_or(1000),
        cfg.seed,
        options(cfg),
    )?;
    report(cfg, out, "mc_sup.csv", r)
}

pub fn cum4(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let js = cfg
        .window
        .j_list
        .clone()
        .ok_or_else(|| CliError::Config("cum4 needs window.j_list".into()))?;
    let mut pipes = Vec::with_capacity(js.len());
    for &j in &js {
        let w = cfg.window_at(j)?;
        let spec = cfg.spectrum_for(&w)?;
        let k = effective_kernel(cfg, &w)?;
        let band = w.support().1;
        let grid = cfg.grid_for(band, k.l_k().min(cfg.q * band))?;
        pipes.push((j, GjqPipeline::new(&spec, &w, &k, cfg.q, &grid)?));
    }
    let refs: Vec<(u32, &GjqPipeline)> = pipes.iter().map(|(j, p)| (*j, p)).collect();
    let t = mc_cumulant_decay(
        &refs,
        cfg.window.b,
        cfg.replicates_or(CUMULANT_MIN_REPLICATES),
        cfg.seed,
    )?;
    out.csv("cum4.csv", |buf| Ok(t.write_csv(buf)?))?;
    let mut body = format!(
        "replicates = {}\nslope = {}\nrate = {}\n",
        t.replicates,
        t.slope,
        t.rate()
    );
    if let Some(wn) = &t.warning {
        let _ = writeln!(body, "warning = {wn}");
    }
    out.manifest(cfg, &body)
}
