//! Diffusion-map spectrum of a user-supplied point cloud.

use anyhow::{bail, Context, Result};
use dmaps_core::density::Sample;
use dmaps_core::kernel::{KernelMatrix, KernelMode};
use dmaps_core::spectral::{eigensolve, EigenOptions, SpectralResult};
use dmaps_core::torus::TorusDomain;
use serde::Serialize;

use super::{normalize, RunContext, SinkhornSummary};
use crate::config::{config_hash, normalization_name, parse_normalization, SpectrumConfig};
use crate::io::{fmt_f64, read_points, write_json, KernelCache, Points, Provenance, Table};

pub const COMMAND: &str = "spectrum";

#[derive(Debug, Clone, Serialize)]
pub struct Eigenvalue {
    pub index: usize,
    /// Eigenvalue of `P`.
    pub mu: f64,
    /// `-ln(mu) / eps`.
    pub lambda: f64,
    /// `(1 - mu) / eps`.
    pub lambda_tilde: f64,
    /// Set when `mu <= 0`, so `lambda` is not defined.
    pub nonpositive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumOutcome {
    pub points: usize,
    pub dim: usize,
    pub eps: f64,
    pub normalization: String,
    pub domain: String,
    pub eigenvalues: Vec<Eigenvalue>,
    /// Eigenvectors of `P` at the input points, normalized so that
    /// `(1/M) sum phi^2 u / v = 1`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub sinkhorn: Option<SinkhornSummary>,
    pub kernel_from_cache: bool,
}

/// Turn raw points into a sample, wrapping coordinates onto the torus when
/// a side length is given.
pub fn sample_from(points: Points, side: Option<f64>) -> Result<(Sample, KernelModeSpec)> {
    let Points { dim, mut values } = points;
    match side {
        Some(l) => {
            let domain = TorusDomain::new(dim, l)?;
            values.iter_mut().for_each(|x| *x = domain.wrap_coord(*x));
            Ok((Sample::from_points(Some(domain), dim, values, 0)?, KernelModeSpec::Torus(domain)))
        }
        None => Ok((Sample::from_points(None, dim, values, 0)?, KernelModeSpec::Euclidean(dim))),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum KernelModeSpec {
    Torus(TorusDomain),
    Euclidean(usize),
}

impl KernelModeSpec {
    fn mode(&self, eps: f64) -> KernelMode {
        match self {
            KernelModeSpec::Torus(d) => KernelMode::periodic(*d, eps),
            KernelModeSpec::Euclidean(dim) => KernelMode::euclidean(*dim),
        }
    }

    fn describe(&self) -> String {
        match self {
            KernelModeSpec::Torus(d) => format!("torus(L={})", d.side()),
            KernelModeSpec::Euclidean(_) => "euclidean".into(),
        }
    }
}

pub fn run_points(points: Points, cfg: &SpectrumConfig) -> Result<SpectrumOutcome> {
    let kind = parse_normalization(&cfg.normalization)?;
    if !(cfg.eps > 0.0 && cfg.eps.is_finite()) {
        bail!("eps must be positive, got {}", cfg.eps);
    }
    let m = points.len();
    if cfg.k == 0 || cfg.k > m {
        bail!("k = {} eigenpairs requested but the input has {m} points", cfg.k);
    }
    let (sample, spec) = sample_from(points, cfg.side)?;
    let mode = spec.mode(cfg.eps);
    let (k, cached) = match &cfg.cache_dir {
        Some(dir) => KernelCache::new(dir).get_or_build(&sample, cfg.eps, mode)?,
        None => (KernelMatrix::build(&sample, cfg.eps, mode)?, false),
    };
    let (op, report) = normalize(k, kind)?;
    let r: SpectralResult = eigensolve(&op, cfg.k, &EigenOptions::default())?;
    let eigenvalues = (0..r.len())
        .map(|i| Eigenvalue {
            index: i,
            mu: r.semigroup_eigs[i],
            lambda: r.generator_eigs[i],
            lambda_tilde: r.laplacian_eigs[i],
            nonpositive: r.nonpositive[i],
        })
        .collect();
    Ok(SpectrumOutcome {
        points: m,
        dim: sample.dim,
        eps: cfg.eps,
        normalization: normalization_name(kind),
        domain: spec.describe(),
        eigenvalues,
        eigenvectors: r.eigenvectors,
        sinkhorn: report.as_ref().map(Into::into),
        kernel_from_cache: cached,
    })
}

pub fn run(cfg: &SpectrumConfig) -> Result<SpectrumOutcome> {
    let input = cfg.input.as_ref().context("no input file given (use --input or [spectrum] input)")?;
    run_points(read_points(input)?, cfg)
}

pub fn write(outcome: &SpectrumOutcome, cfg: &SpectrumConfig, ctx: &RunContext) -> Result<()> {
    let dir = ctx.prepare()?;
    // the cache location does not change results
    let mut hashed = cfg.clone();
    hashed.cache_dir = None;
    let prov = Provenance::new(config_hash(COMMAND, &hashed), ctx.seed);

    let mut ev = Table::new(&["index", "mu", "lambda", "lambda_tilde", "nonpositive"]);
    for e in &outcome.eigenvalues {
        let lambda = if e.nonpositive { None } else { Some(e.lambda) };
        ev.push(vec![
            e.index.to_string(),
            fmt_f64(Some(e.mu)),
            fmt_f64(lambda),
            fmt_f64(Some(e.lambda_tilde)),
            e.nonpositive.to_string(),
        ]);
    }
    ev.write(&dir.join("eigenvalues.csv"), &prov)?;

    let header: Vec<String> = std::iter::once("point".to_string())
        .chain((0..outcome.eigenvectors.len()).map(|j| format!("phi_{j}")))
        .collect();
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut vecs = Table::new(&refs);
    for i in 0..outcome.points {
        let mut row = vec![i.to_string()];
        row.extend(outcome.eigenvectors.iter().map(|v| fmt_f64(Some(v[i]))));
        vecs.push(row);
    }
    vecs.write(&dir.join("eigenvectors.csv"), &prov)?;

    let json = serde_json::json!({
        "command": COMMAND,
        "provenance": prov,
        "points": outcome.points,
        "dim": outcome.dim,
        "eps": outcome.eps,
        "normalization": outcome.normalization,
        "domain": outcome.domain,
        "eigenvalues": outcome.eigenvalues,
        "sinkhorn": outcome.sinkhorn,
    });
    write_json(&dir.join("spectrum.json"), &json)
}
