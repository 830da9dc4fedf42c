//! Sampling (variance) and total eigenspace errors of diffusion maps on
//! random samples, against continuum-`eps` and generator references.

use anyhow::{ensure, Result};
use dmaps_core::density::{effective_sample_size, DensityModel, Sample};
use dmaps_core::kernel::{KernelMatrix, KernelMode};
use dmaps_core::metrics::weighted_l2_distance;
use dmaps_core::reference::{separable_reference, GeneratorKind, ReferenceRequest, TensorReference};
use dmaps_core::spectral::{eigensolve, group_vectors, merge_by_reference, EigenOptions};
use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, mean, median, normalize, RunContext};
use crate::config::{check_eps, config_hash, normalization_name, parse_normalizations, VarianceConfig};
use crate::experiments::bias::ERROR_COLUMNS;
use crate::io::{fmt_f64, write_json, Provenance, Table};
use crate::plot;

pub const COMMAND: &str = "variance-sweep";

/// Reference eigenpairs computed per axis; enough to cover the first few clusters.
const REFERENCE_PAIRS: usize = 16;

/// Errors of one trial for one normalization.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub normalization: String,
    pub eps: f64,
    pub m: usize,
    pub trial: usize,
    /// Seed of this trial's sample.
    pub seed: u64,
    /// Mean eigenvalue of the cluster against the continuum-`eps` value.
    pub var_err_lambda: f64,
    pub var_err_lambda_tilde: f64,
    /// Eigenspace distance to the continuum-`eps` eigenspace.
    pub var_err_subspace: f64,
    pub total_err_lambda: f64,
    pub total_err_lambda_tilde: f64,
    /// Eigenspace distance to the generator eigenspace.
    pub total_err_subspace: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub normalization: String,
    pub eps: f64,
    pub m: usize,
    pub m_eff: f64,
    pub trials: usize,
    pub var_mean: f64,
    pub var_median: f64,
    pub total_mean: f64,
    pub total_median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceOutcome {
    pub cluster: usize,
    pub multiplicity: usize,
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
}

impl VarianceOutcome {
    pub fn summary_for(&self, normalization: &str, eps: f64) -> Vec<&SummaryRow> {
        self.summary.iter().filter(|s| s.normalization == normalization && s.eps == eps).collect()
    }
}

/// Cluster eigenvalue error and eigenspace distance of one spectral result
/// against a tensor reference.
fn compare(
    sample: &Sample,
    computed: &dmaps_core::spectral::SpectralResult,
    reference: &TensorReference,
    cluster: usize,
) -> Result<(f64, f64, f64)> {
    let merged = merge_by_reference(&computed.generator_eigs, &reference.clusters, 0.0);
    ensure!(merged.groups.len() > cluster, "too few computed eigenpairs for cluster {cluster}");
    let group = &merged.groups[cluster];
    let c = &reference.clusters[cluster];
    let ours = group_vectors(computed, group);
    let theirs: Vec<Vec<f64>> =
        c.range().map(|j| (0..sample.len()).map(|i| reference.eval(j, sample.point(i))).collect()).collect();
    let m = sample.len();
    let dist = weighted_l2_distance(&ours, &theirs, &vec![1.0 / m as f64; m])?.value;
    let lam = mean(&group.iter().map(|&i| computed.generator_eigs[i]).collect::<Vec<_>>());
    let tilde = mean(&group.iter().map(|&i| computed.laplacian_eigs[i]).collect::<Vec<_>>());
    Ok(((lam - c.value).abs(), (tilde - c.value).abs(), dist))
}

pub fn run(cfg: &VarianceConfig, seed: u64) -> Result<VarianceOutcome> {
    let model: DensityModel = cfg.density.build()?;
    let d = model.domain().dim();
    check_eps(&cfg.eps, model.domain().side())?;
    ensure!(!cfg.m.is_empty(), "M list is empty");
    ensure!(cfg.trials >= 1, "at least one trial is required");
    ensure!(cfg.cluster >= 1, "cluster 0 holds the constants; choose cluster >= 1");
    let kinds = parse_normalizations(&cfg.normalizations)?;

    let total_refs: Vec<TensorReference> = kinds
        .iter()
        .map(|&kind| {
            let req = ReferenceRequest::Generator(GeneratorKind::limit_of(kind));
            Ok(separable_reference(&model, REFERENCE_PAIRS, req, cfg.n_modes)?)
        })
        .collect::<Result<_>>()?;
    let var_refs: Vec<Vec<TensorReference>> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            kinds
                .iter()
                .map(|&kind| {
                    let req = ReferenceRequest::Continuum { eps, kind };
                    Ok(separable_reference(&model, REFERENCE_PAIRS, req, cfg.n_grid)?)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let target = &total_refs[0].clusters;
    ensure!(target.len() > cfg.cluster + 1, "reference resolves only {} clusters", target.len());
    let multiplicity = target[cfg.cluster].multiplicity;
    // computed pairs: through the requested cluster, plus one spare
    let n_eigs = target[cfg.cluster].range().end + 1;

    // (eps, M, trial); the sample depends on (M, trial) only, so every eps
    // sees the same points
    let jobs: Vec<(usize, usize, usize)> = (0..cfg.eps.len())
        .flat_map(|e| (0..cfg.m.len()).flat_map(move |mi| (0..cfg.trials).map(move |t| (e, mi, t))))
        .collect();
    let rows: Vec<Vec<TrialRow>> = jobs
        .par_iter()
        .map(|&(e, mi, t)| -> Result<Vec<TrialRow>> {
            let eps = cfg.eps[e];
            let m = cfg.m[mi];
            ensure!(n_eigs <= m, "M = {m} is too small for {n_eigs} eigenpairs");
            let trial_seed = derive_seed(seed, &[m as u64, t as u64]);
            let sample = model.sample(m, trial_seed)?;
            let k = KernelMatrix::build(&sample, eps, KernelMode::periodic(*model.domain(), eps))?;
            let mut out = Vec::with_capacity(kinds.len());
            for (a, &kind) in kinds.iter().enumerate() {
                let (op, _) = normalize(k.clone(), kind)?;
                let spec = eigensolve(&op, n_eigs, &EigenOptions::default())?;
                let (vl, vt, vs) = compare(&sample, &spec, &var_refs[e][a], cfg.cluster)?;
                let (tl, tt, ts) = compare(&sample, &spec, &total_refs[a], cfg.cluster)?;
                out.push(TrialRow {
                    normalization: normalization_name(kind),
                    eps,
                    m,
                    trial: t,
                    seed: trial_seed,
                    var_err_lambda: vl,
                    var_err_lambda_tilde: vt,
                    var_err_subspace: vs,
                    total_err_lambda: tl,
                    total_err_lambda_tilde: tt,
                    total_err_subspace: ts,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    // normalization-major order, then eps, M and trial as in `jobs`
    let trials: Vec<TrialRow> = (0..kinds.len()).flat_map(|a| rows.iter().map(move |r| r[a].clone())).collect();

    let mut summary = Vec::new();
    for &kind in &kinds {
        let name = normalization_name(kind);
        for &eps in &cfg.eps {
            for &m in &cfg.m {
                let sel: Vec<&TrialRow> =
                    trials.iter().filter(|r| r.normalization == name && r.eps == eps && r.m == m).collect();
                let var: Vec<f64> = sel.iter().map(|r| r.var_err_subspace).collect();
                let tot: Vec<f64> = sel.iter().map(|r| r.total_err_subspace).collect();
                summary.push(SummaryRow {
                    normalization: name.clone(),
                    eps,
                    m,
                    m_eff: effective_sample_size(m, eps, d),
                    trials: sel.len(),
                    var_mean: mean(&var),
                    var_median: median(&var),
                    total_mean: mean(&tot),
                    total_median: median(&tot),
                });
            }
        }
    }
    Ok(VarianceOutcome { cluster: cfg.cluster, multiplicity, trials, summary })
}

pub fn write(outcome: &VarianceOutcome, cfg: &VarianceConfig, ctx: &RunContext) -> Result<()> {
    let dir = ctx.prepare()?;
    let prov = Provenance::new(config_hash(COMMAND, cfg), ctx.seed);
    // the seed column holds the per-trial sample seed
    let table = |total: bool| {
        let mut t = Table::new(&ERROR_COLUMNS);
        for r in &outcome.trials {
            let (l, lt, s) = if total {
                (r.total_err_lambda, r.total_err_lambda_tilde, r.total_err_subspace)
            } else {
                (r.var_err_lambda, r.var_err_lambda_tilde, r.var_err_subspace)
            };
            t.push(vec![
                outcome.cluster.to_string(),
                fmt_f64(Some(r.eps)),
                r.m.to_string(),
                r.seed.to_string(),
                r.normalization.clone(),
                fmt_f64(Some(l)),
                fmt_f64(Some(lt)),
                fmt_f64(Some(s)),
                String::new(),
                String::new(),
            ]);
        }
        t
    };
    table(false).write(&dir.join("variance_errors.csv"), &prov)?;
    table(true).write(&dir.join("total_errors.csv"), &prov)?;

    let mut summary = Table::new(&[
        "normalization",
        "eps",
        "M",
        "m_eff",
        "trials",
        "var_mean",
        "var_median",
        "total_mean",
        "total_median",
    ]);
    for s in &outcome.summary {
        summary.push(vec![
            s.normalization.clone(),
            fmt_f64(Some(s.eps)),
            s.m.to_string(),
            fmt_f64(Some(s.m_eff)),
            s.trials.to_string(),
            fmt_f64(Some(s.var_mean)),
            fmt_f64(Some(s.var_median)),
            fmt_f64(Some(s.total_mean)),
            fmt_f64(Some(s.total_median)),
        ]);
    }
    summary.write(&dir.join("variance_summary.csv"), &prov)?;

    let mut names: Vec<String> = Vec::new();
    for s in &outcome.summary {
        if !names.contains(&s.normalization) {
            names.push(s.normalization.clone());
        }
    }
    std::fs::write(
        dir.join("variance_sweep.plt"),
        plot::variance_script("variance_summary.csv", &names, &cfg.eps, &cfg.m),
    )?;
    let json = serde_json::json!({
        "command": COMMAND,
        "provenance": prov,
        "config": cfg,
        "trials_per_point": cfg.trials,
        "cluster": outcome.cluster,
        "multiplicity": outcome.multiplicity,
        "summary": outcome.summary,
    });
    write_json(&dir.join("variance_sweep.json"), &json)
}
