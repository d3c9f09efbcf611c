//! Run configuration: TOML with sections, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sphere_excursion::simsphere::SphereGrid;
use sphere_excursion::spectra::Window;
use sphere_excursion::{NeedletWindow, PowerSpectrum, SmoothingKernel};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub levels: Vec<f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub spectrum: SpectrumConfig,
    pub window: WindowConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub mc: McConfig,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("sphex-out")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    /// `sachs-wolfe`, `bardeen` or `tabulated`.
    pub model: String,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellmax: Option<usize>,
    /// Two-column `ℓ C_ℓ` text file for `tabulated`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(rename = "B")]
    pub b: f64,
    pub j: u32,
    /// Scales for `cum4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_list: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `κ ≡ 1` on `0..=L_K`.
    #[serde(rename = "L_K", default, skip_serializing_if = "Option::is_none")]
    pub l_k: Option<usize>,
    /// Explicit `κ(0..=L_K)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "yes")]
    pub exact_geometry: bool,
    /// Also run the Gaussian surrogate (orders ≥ 2).
    #[serde(default = "yes")]
    pub surrogate: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            exact_geometry: true,
            surrogate: true,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical serialization; the hash is taken over these bytes.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form with `output` reset, so that the same
    /// experiment written to different directories shares one hash.
    pub fn hash(&self) -> String {
        let keyed = RunConfig {
            output: default_output(),
            ..self.clone()
        };
        Sha256::digest(keyed.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn window(&self) -> Result<NeedletWindow, CliError> {
        Ok(NeedletWindow::new(self.window.b, self.window.j)?)
    }

    pub fn window_at(&self, j: u32) -> Result<NeedletWindow, CliError> {
        Ok(NeedletWindow::new(self.window.b, j)?)
    }

    /// The spectrum, defaulting `ellmax` to cover the window's support.
    pub fn spectrum_for(&self, w: &NeedletWindow) -> Result<PowerSpectrum, CliError> {
        let s = &self.spectrum;
        let ellmax = s
            .ellmax
            .unwrap_or_else(|| w.default_ellmax().max(w.support().1));
        let spec = match s.model.as_str() {
            "sachs-wolfe" => {
                let g =
                    s.g.ok_or_else(|| invalid("spectrum.G is required for sachs-wolfe"))?;
                let alpha = s
                    .alpha
                    .ok_or_else(|| invalid("spectrum.alpha is required for sachs-wolfe"))?;
                PowerSpectrum::sachs_wolfe(g, alpha, ellmax)?
            }
            "bardeen" => PowerSpectrum::bardeen(ellmax),
            "tabulated" => {
                let path = s
                    .file
                    .as_ref()
                    .ok_or_else(|| invalid("spectrum.file is required for tabulated"))?;
                let f = std::fs::File::open(path)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
                PowerSpectrum::from_two_column(std::io::BufReader::new(f))?
            }
            other => return Err(invalid(format!("unknown spectrum model {other:?}"))),
        };
        Ok(spec)
    }

    pub fn kernel(&self) -> Result<Option<SmoothingKernel>, CliError> {
        let Some(k) = &self.kernel else {
            return Ok(None);
        };
        match (k.l_k, &k.kappa) {
            (Some(l), None) => Ok(Some(SmoothingKernel::flat(l))),
            (None, Some(kappa)) => Ok(Some(SmoothingKernel::new(kappa.clone())?)),
            _ => Err(invalid("kernel needs exactly one of L_K or kappa")),
        }
    }

    pub fn replicates_or(&self, default: usize) -> usize {
        self.replicates.unwrap_or(default)
    }

    /// The configured grid, or the smallest one that resolves the output
    /// band `out` of an order-`q` field built on a band-`band` needlet field
    /// (with four rings per output wavelength for the geometry).
    pub fn grid_for(&self, band: usize, out: usize) -> Result<SphereGrid, CliError> {
        if let Some(g) = self.grid {
            return Ok(SphereGrid::new(g.n_theta, g.n_phi)?);
        }
        let product = if self.q > 1 {
            self.q * band + out
        } else {
            band
        };
        let nt = (4 * out).max(product / 2 + 1).max(product + 1).max(8);
        Ok(SphereGrid::new(nt, 2 * nt + 1)?)
    }
}
