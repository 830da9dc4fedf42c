//! Deterministic (bias) error of the continuum operators against their
//! limiting generators, as a function of `eps`.

use anyhow::{ensure, Result};
use dmaps_core::density::DensityModel;
use dmaps_core::metrics::{fit_rate, sup_grid_distance, weighted_l2_distance, SupOptions};
use dmaps_core::normalization::NormalizationKind;
use dmaps_core::reference::{
    continuum_eigendata, generator_eigendata, separable_reference, Cluster, ContinuumOptions, GeneratorKind,
    GeneratorOptions, ReferenceEigendata, ReferenceRequest,
};
use rayon::prelude::*;
use serde::Serialize;

use super::RunContext;
use crate::config::{check_eps, config_hash, normalization_name, parse_normalizations, BiasConfig};
use crate::io::{fmt_f64, write_json, Provenance, Table};
use crate::plot;

pub const COMMAND: &str = "bias-sweep";

/// Error of one eigenvalue at one `eps`.
#[derive(Debug, Clone, Serialize)]
pub struct BiasRow {
    pub normalization: String,
    pub eps: f64,
    pub index: usize,
    pub reference: f64,
    pub computed: f64,
    pub err_lambda: f64,
    pub err_lambda_tilde: f64,
    /// Distance between the reference and continuum eigenspaces of the
    /// cluster containing `index` (one-dimensional densities only).
    pub err_subspace_l2: Option<f64>,
    pub err_subspace_sup_lo: Option<f64>,
    pub err_subspace_sup_hi: Option<f64>,
}

/// Log-log fit of `err_lambda` against `eps` for one eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct BiasRate {
    pub normalization: String,
    pub index: usize,
    /// `None` when some error is exactly zero and no line can be fitted.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residual_rms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSummary {
    pub normalization: String,
    pub generator: String,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasOutcome {
    pub eps: Vec<f64>,
    pub indices: Vec<usize>,
    pub references: Vec<ReferenceSummary>,
    pub rows: Vec<BiasRow>,
    pub rates: Vec<BiasRate>,
}

impl BiasOutcome {
    pub fn rate(&self, normalization: &str, index: usize) -> Option<&BiasRate> {
        self.rates.iter().find(|r| r.normalization == normalization && r.index == index)
    }

    /// `err_lambda` of eigenvalue `index` for each `eps`, in grid order.
    pub fn errors(&self, normalization: &str, index: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.normalization == normalization && r.index == index)
            .map(|r| r.err_lambda)
            .collect()
    }
}

/// Eigenvalues, clusters and (in one dimension) eigenfunctions of a reference.
struct Reference {
    eigenvalues: Vec<f64>,
    clusters: Vec<Cluster>,
    data: Option<ReferenceEigendata>,
}

impl Reference {
    fn one_dim(data: ReferenceEigendata) -> Self {
        Self { eigenvalues: data.eigenvalues.clone(), clusters: data.clusters.clone(), data: Some(data) }
    }
}

fn generator_reference(model: &DensityModel, n: usize, kind: GeneratorKind, cfg: &BiasConfig) -> Result<Reference> {
    if model.domain().dim() == 1 {
        let opts = GeneratorOptions { n_modes: cfg.n_modes, ..Default::default() };
        Ok(Reference::one_dim(generator_eigendata(model, n, kind, &opts)?))
    } else {
        let t = separable_reference(model, n, ReferenceRequest::Generator(kind), cfg.n_modes)?;
        Ok(Reference { eigenvalues: t.eigenvalues, clusters: t.clusters, data: None })
    }
}

fn continuum_reference(
    model: &DensityModel,
    n: usize,
    eps: f64,
    kind: NormalizationKind,
    cfg: &BiasConfig,
) -> Result<Reference> {
    if model.domain().dim() == 1 {
        let opts = ContinuumOptions { n_grid: cfg.n_grid, ..Default::default() };
        Ok(Reference::one_dim(continuum_eigendata(model, eps, n, kind, &opts)?))
    } else {
        let t = separable_reference(model, n, ReferenceRequest::Continuum { eps, kind }, cfg.n_grid)?;
        Ok(Reference { eigenvalues: t.eigenvalues, clusters: t.clusters, data: None })
    }
}

/// Reference-cluster subspace distances on an even grid, weighted by the density.
fn subspace_errors(
    model: &DensityModel,
    reference: &ReferenceEigendata,
    computed: &ReferenceEigendata,
    cluster: &Cluster,
    cfg: &BiasConfig,
) -> Result<(f64, Option<(f64, f64)>)> {
    let n = cfg.eval_grid;
    let h = model.domain().side() / n as f64;
    let weights: Vec<f64> = (0..n).map(|i| model.eval(&[i as f64 * h]).map(|r| r * h)).collect::<Result<_, _>>()?;
    let a: Vec<Vec<f64>> = cluster.range().map(|j| reference.grid_values(j, n)).collect();
    let b: Vec<Vec<f64>> = cluster.range().map(|j| computed.grid_values(j, n)).collect();
    let l2 = weighted_l2_distance(&a, &b, &weights)?.value;
    let sup = if cfg.sup_norm {
        let r = sup_grid_distance(&a, &b, &SupOptions::default())?;
        Some((r.lower, r.upper))
    } else {
        None
    };
    Ok((l2, sup))
}

pub fn run(cfg: &BiasConfig) -> Result<BiasOutcome> {
    let model = cfg.density.build()?;
    let eps_grid = cfg.eps_grid();
    check_eps(&eps_grid, model.domain().side())?;
    ensure!(cfg.k >= 1, "k must be at least 1");
    let kinds = parse_normalizations(&cfg.normalizations)?;
    // room for a degenerate cluster straddling index k
    let n = cfg.k + 3;
    let indices: Vec<usize> = (1..=cfg.k).collect();

    let generators: Vec<Reference> = kinds
        .par_iter()
        .map(|&kind| generator_reference(&model, n, GeneratorKind::limit_of(kind), cfg))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, f64)> = (0..kinds.len()).flat_map(|a| eps_grid.iter().map(move |&e| (a, e))).collect();
    let rows: Vec<Vec<BiasRow>> = jobs
        .par_iter()
        .map(|&(a, eps)| {
            let kind = kinds[a];
            let gen = &generators[a];
            let cont = continuum_reference(&model, n, eps, kind, cfg)?;
            let mut out = Vec::with_capacity(indices.len());
            for &i in &indices {
                let lambda = cont.eigenvalues[i];
                let mu = (-eps * lambda).exp();
                let tilde = (1.0 - mu) / eps;
                let cluster = gen.clusters.iter().find(|c| c.range().contains(&i)).filter(|c| c.range().end <= n);
                let (l2, sup) = match (cluster, &gen.data, &cont.data) {
                    (Some(c), Some(g), Some(d)) => {
                        let (l2, sup) = subspace_errors(&model, g, d, c, cfg)?;
                        (Some(l2), sup)
                    }
                    _ => (None, None),
                };
                out.push(BiasRow {
                    normalization: normalization_name(kind),
                    eps,
                    index: i,
                    reference: gen.eigenvalues[i],
                    computed: lambda,
                    err_lambda: (lambda - gen.eigenvalues[i]).abs(),
                    err_lambda_tilde: (tilde - gen.eigenvalues[i]).abs(),
                    err_subspace_l2: l2,
                    err_subspace_sup_lo: sup.map(|s| s.0),
                    err_subspace_sup_hi: sup.map(|s| s.1),
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<BiasRow> = rows.into_iter().flatten().collect();

    let mut rates = Vec::new();
    for &kind in &kinds {
        let name = normalization_name(kind);
        for &i in &indices {
            let errs: Vec<f64> =
                rows.iter().filter(|r| r.normalization == name && r.index == i).map(|r| r.err_lambda).collect();
            let fit = if eps_grid.len() >= 3 { fit_rate(&eps_grid, &errs).ok() } else { None };
            rates.push(BiasRate {
                normalization: name.clone(),
                index: i,
                slope: fit.as_ref().map(|f| f.slope),
                intercept: fit.as_ref().map(|f| f.intercept),
                residual_rms: fit.as_ref().map(|f| f.residual_rms),
            });
        }
    }

    let references = kinds
        .iter()
        .zip(&generators)
        .map(|(&kind, g)| ReferenceSummary {
            normalization: normalization_name(kind),
            generator: match GeneratorKind::limit_of(kind) {
                GeneratorKind::Langevin => "langevin".into(),
                GeneratorKind::Standard { alpha } => format!("standard:{alpha}"),
            },
            eigenvalues: g.eigenvalues[..=cfg.k].to_vec(),
            multiplicities: g.clusters.iter().filter(|c| c.start <= cfg.k).map(|c| c.multiplicity).collect(),
        })
        .collect();

    Ok(BiasOutcome { eps: eps_grid, indices, references, rows, rates })
}

pub const ERROR_COLUMNS: [&str; 10] = [
    "k",
    "eps",
    "M",
    "seed",
    "normalization",
    "err_lambda",
    "err_lambda_tilde",
    "err_subspace_l2",
    "err_subspace_sup_lo",
    "err_subspace_sup_hi",
];

pub fn write(outcome: &BiasOutcome, cfg: &BiasConfig, ctx: &RunContext) -> Result<()> {
    let dir = ctx.prepare()?;
    let prov = Provenance::new(config_hash(COMMAND, cfg), ctx.seed);

    // no sampling: the M column is empty
    let mut errors = Table::new(&ERROR_COLUMNS);
    for r in &outcome.rows {
        errors.push(vec![
            r.index.to_string(),
            fmt_f64(Some(r.eps)),
            String::new(),
            ctx.seed.to_string(),
            r.normalization.clone(),
            fmt_f64(Some(r.err_lambda)),
            fmt_f64(Some(r.err_lambda_tilde)),
            fmt_f64(r.err_subspace_l2),
            fmt_f64(r.err_subspace_sup_lo),
            fmt_f64(r.err_subspace_sup_hi),
        ]);
    }
    errors.write(&dir.join("bias_errors.csv"), &prov)?;

    let mut rates = Table::new(&["normalization", "k", "slope", "intercept", "residual_rms", "points"]);
    for r in &outcome.rates {
        rates.push(vec![
            r.normalization.clone(),
            r.index.to_string(),
            fmt_f64(r.slope),
            fmt_f64(r.intercept),
            fmt_f64(r.residual_rms),
            outcome.eps.len().to_string(),
        ]);
    }
    rates.write(&dir.join("bias_rates.csv"), &prov)?;

    let names: Vec<String> = outcome.references.iter().map(|r| r.normalization.clone()).collect();
    std::fs::write(dir.join("bias_sweep.plt"), plot::bias_script("bias_errors.csv", &names, &outcome.indices))?;
    let summary = serde_json::json!({
        "command": COMMAND,
        "provenance": prov,
        "config": cfg,
        "eps": outcome.eps,
        "references": outcome.references,
        "rates": outcome.rates,
    });
    write_json(&dir.join("bias_sweep.json"), &summary)
}
