//! TOML experiment configuration.
//!
//! Every section is optional; missing keys take the defaults below. A file
//! like
//!
//! ```toml
//! seed = 7
//!
//! [output]
//! dir = "results"
//!
//! [bias_sweep]
//! density = { kind = "lacunary" }
//! normalizations = ["standard:0.5", "sinkhorn"]
//! eps_min = 1e-3
//! eps_max = 1e-1
//! eps_points = 12
//!
//! [variance_sweep]
//! m = [250, 1000, 4000]
//! eps = [0.05]
//! trials = 10
//! ```
//!
//! runs both sweeps with the stated grids.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use dmaps_core::density::DensityModel;
use dmaps_core::normalization::NormalizationKind;
use dmaps_core::torus::TorusDomain;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub output: OutputConfig,
    pub bias_sweep: BiasConfig,
    pub variance_sweep: VarianceConfig,
    pub assa_trace: AssaTraceConfig,
    pub spectrum: SpectrumConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// A density on the torus, as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform {
        #[serde(default = "one")]
        side: f64,
        #[serde(default = "one_dim")]
        dim: usize,
    },
    /// `1 + (1 - b^-p)/2 sum_j b^{-p j} cos(2 pi b^j x / L)`.
    Lacunary {
        #[serde(default = "one")]
        side: f64,
        #[serde(default = "lacunary_exponent")]
        exponent: f64,
        #[serde(default = "lacunary_base")]
        base: u64,
    },
    /// `exp(cos 4 pi x + f(y) + f(z))` on the unit 3-torus.
    SeparableBenchmark,
    /// Positive values on an even grid of `[0, side)`, from `values` or a
    /// one-column CSV `file`.
    Tabulated {
        #[serde(default = "one")]
        side: f64,
        #[serde(default)]
        values: Vec<f64>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
}

fn one() -> f64 {
    1.0
}

fn one_dim() -> usize {
    1
}

fn lacunary_exponent() -> f64 {
    2.2
}

fn lacunary_base() -> u64 {
    3
}

impl DensitySpec {
    pub fn lacunary() -> Self {
        DensitySpec::Lacunary { side: 1.0, exponent: lacunary_exponent(), base: lacunary_base() }
    }

    pub fn build(&self) -> Result<DensityModel> {
        Ok(match self {
            DensitySpec::Uniform { side, dim } => DensityModel::uniform(TorusDomain::new(*dim, *side)?),
            DensitySpec::Lacunary { side, exponent, base } => DensityModel::cosine_lacunary(*side, *exponent, *base)?,
            DensitySpec::SeparableBenchmark => DensityModel::separable_benchmark(),
            DensitySpec::Tabulated { side, values, file } => {
                let values = match (values.is_empty(), file) {
                    (false, None) => values.clone(),
                    (true, Some(path)) => {
                        let rows = crate::io::read_points(path)?;
                        ensure!(rows.dim == 1, "{}: tabulated density needs one column", path.display());
                        rows.values
                    }
                    _ => bail!("tabulated density needs exactly one of `values` and `file`"),
                };
                DensityModel::tabulated(*side, values)?
            }
        })
    }
}

/// Parse `sinkhorn` or `standard:ALPHA`.
pub fn parse_normalization(s: &str) -> Result<NormalizationKind> {
    let s = s.trim();
    if s == "sinkhorn" {
        return Ok(NormalizationKind::Sinkhorn);
    }
    if let Some(alpha) = s.strip_prefix("standard:") {
        let alpha: f64 = alpha.parse().with_context(|| format!("bad alpha in `{s}`"))?;
        ensure!(alpha.is_finite(), "alpha must be finite in `{s}`");
        return Ok(NormalizationKind::Standard { alpha });
    }
    bail!("unknown normalization `{s}` (expected `sinkhorn` or `standard:ALPHA`)")
}

/// Short name used in CSV columns.
pub fn normalization_name(kind: NormalizationKind) -> String {
    match kind {
        NormalizationKind::Sinkhorn => "sinkhorn".into(),
        NormalizationKind::Standard { alpha } => format!("standard:{alpha}"),
    }
}

pub fn parse_normalizations(list: &[String]) -> Result<Vec<NormalizationKind>> {
    ensure!(!list.is_empty(), "normalization list is empty");
    list.iter().map(|s| parse_normalization(s)).collect()
}

/// `n` log-spaced points from `lo` to `hi`, ascending.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

/// Reject empty or nonpositive grids; warn when `eps` exceeds `L^2 / 4`.
pub fn check_eps(eps: &[f64], side: f64) -> Result<()> {
    ensure!(!eps.is_empty(), "eps grid is empty");
    for &e in eps {
        ensure!(e > 0.0 && e.is_finite(), "eps must be positive and finite, got {e}");
        if e > side * side / 4.0 {
            eprintln!("warning: eps = {e} exceeds L^2/4 = {}; the kernel is far from local", side * side / 4.0);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    pub density: DensitySpec,
    pub normalizations: Vec<String>,
    /// Explicit grid; overrides `eps_min`, `eps_max` and `eps_points`.
    pub eps: Option<Vec<f64>>,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_points: usize,
    /// Number of nontrivial eigenvalues reported.
    pub k: usize,
    /// Fourier modes of the generator reference.
    pub n_modes: usize,
    /// Grid points of the continuum operator.
    pub n_grid: usize,
    /// Points of the grid on which eigenfunctions are compared.
    pub eval_grid: usize,
    /// Also compute the (slower) sup-norm subspace distance.
    pub sup_norm: bool,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self {
            density: DensitySpec::lacunary(),
            normalizations: vec!["standard:0.5".into(), "sinkhorn".into()],
            eps: None,
            eps_min: 1e-3,
            eps_max: 1e-1,
            eps_points: 12,
            k: 3,
            n_modes: 2001,
            n_grid: 2048,
            eval_grid: 4096,
            sup_norm: false,
        }
    }
}

impl BiasConfig {
    pub fn eps_grid(&self) -> Vec<f64> {
        match &self.eps {
            Some(e) => e.clone(),
            None => log_grid(self.eps_min, self.eps_max, self.eps_points),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceConfig {
    pub density: DensitySpec,
    pub normalizations: Vec<String>,
    pub eps: Vec<f64>,
    pub m: Vec<usize>,
    pub trials: usize,
    /// Index of the eigenvalue cluster whose eigenspace is compared (0 is the constants).
    pub cluster: usize,
    /// Grid points per axis of the continuum reference.
    pub n_grid: usize,
    /// Fourier modes of the generator reference.
    pub n_modes: usize,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self {
            density: DensitySpec::SeparableBenchmark,
            normalizations: vec!["standard:0.5".into(), "sinkhorn".into()],
            eps: vec![0.025, 0.05, 0.1],
            m: vec![250, 1000, 4000],
            trials: 10,
            cluster: 1,
            n_grid: 512,
            n_modes: 257,
        }
    }
}

/// Where the assa-trace sample comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TraceSample {
    /// Standard normal points in `R^dim` with the free Gaussian kernel.
    Gaussian { dim: usize },
    /// Points drawn from a torus density with the periodized kernel.
    Torus { density: DensitySpec },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssaTraceConfig {
    pub sample: TraceSample,
    pub m: usize,
    pub eps: f64,
    pub tol: f64,
    pub assa_max_iter: usize,
    pub plain_max_iter: usize,
}

impl Default for AssaTraceConfig {
    fn default() -> Self {
        Self {
            sample: TraceSample::Gaussian { dim: 3 },
            m: 3000,
            eps: 0.5,
            tol: 1e-13,
            assa_max_iter: 200,
            plain_max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub input: Option<PathBuf>,
    /// Torus side length; absent means points live in Euclidean space.
    pub side: Option<f64>,
    pub eps: f64,
    pub normalization: String,
    pub k: usize,
    /// Directory for cached kernel matrices.
    pub cache_dir: Option<PathBuf>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { input: None, side: None, eps: 0.01, normalization: "sinkhorn".into(), k: 10, cache_dir: None }
    }
}

/// Hex SHA-256 of a command name and its effective configuration.
pub fn config_hash<T: Serialize>(command: &str, config: &T) -> String {
    let json = serde_json::json!({ "command": command, "config": config });
    hex(&Sha256::digest(json.to_string().as_bytes()))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c.bias_sweep.eps_grid().len(), 12);
        assert_eq!(c.variance_sweep.trials, 10);
        assert_eq!(c.bias_sweep.density, DensitySpec::lacunary());
    }

    #[test]
    fn sections_and_densities_parse() {
        let c = Config::parse(
            r#"
            seed = 3
            [bias_sweep]
            density = { kind = "uniform", dim = 1 }
            eps = [0.01, 0.02, 0.04]
            [assa_trace]
            sample = { kind = "torus", density = { kind = "lacunary" } }
            m = 100
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.bias_sweep.eps_grid(), vec![0.01, 0.02, 0.04]);
        assert!(matches!(c.assa_trace.sample, TraceSample::Torus { .. }));
        assert!(Config::parse("[bias_sweep]\nbogus = 1").is_err());
    }

    #[test]
    fn normalization_strings() {
        assert_eq!(parse_normalization("sinkhorn").unwrap(), NormalizationKind::Sinkhorn);
        assert_eq!(parse_normalization("standard:0.5").unwrap(), NormalizationKind::Standard { alpha: 0.5 });
        assert!(parse_normalization("standard").is_err());
        assert_eq!(normalization_name(NormalizationKind::Standard { alpha: 1.0 }), "standard:1");
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1e-1, 12);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[11] - 1e-1).abs() < 1e-15);
        assert!(check_eps(&[], 1.0).is_err());
    }

    #[test]
    fn hash_depends_on_config() {
        let a = BiasConfig::default();
        let mut b = a.clone();
        b.k = 4;
        assert_ne!(config_hash("bias-sweep", &a), config_hash("bias-sweep", &b));
        assert_eq!(config_hash("bias-sweep", &a), config_hash("bias-sweep", &a.clone()));
        assert_eq!(config_hash("x", &1).len(), 64);
    }
}
