//! Residual traces of plain Sinkhorn iteration and ASSA on the same kernel.

use anyhow::{ensure, Result};
use dmaps_core::density::Sample;
use dmaps_core::kernel::{KernelMatrix, KernelMode};
use dmaps_core::normalization::{
    assa, assa_initial, convergence_trace, tail_contraction, theoretical_contraction_bound, AssaOptions,
    SinkhornAlgorithm, CONTRACTION_NOISE_FLOOR, CONTRACTION_WINDOW,
};
use serde::Serialize;

use super::{RunContext, SinkhornSummary};
use crate::config::{config_hash, AssaTraceConfig, TraceSample};
use crate::io::{fmt_f64, write_json, Provenance, Table};
use crate::plot;

pub const COMMAND: &str = "assa-trace";

#[derive(Debug, Clone, Serialize)]
pub struct TraceOutcome {
    /// Fixed-point residuals `||u (K u) - 1||_inf` per iteration.
    pub assa_residuals: Vec<f64>,
    pub plain_residuals: Vec<f64>,
    pub assa_iterations: Option<usize>,
    pub plain_iterations: Option<usize>,
    /// Plain iterations divided by ASSA iterations.
    pub ratio: Option<f64>,
    /// Largest tail ratio of the ASSA fixed-point residuals.
    pub assa_tail_contraction: Option<f64>,
    /// The ASSA solver's own report (log-increment stopping rule).
    pub assa_report: SinkhornSummary,
    /// `||log u0 - log U||_inf` of the starting guess.
    pub initial_distance: f64,
    /// Contraction bound for that distance, when it lies in the bound's domain.
    pub theoretical_bound: Option<f64>,
}

pub fn build_kernel(cfg: &AssaTraceConfig, seed: u64) -> Result<KernelMatrix> {
    ensure!(cfg.m >= 2, "need at least two points");
    ensure!(cfg.eps > 0.0 && cfg.eps.is_finite(), "eps must be positive");
    Ok(match &cfg.sample {
        TraceSample::Gaussian { dim } => {
            let s = Sample::standard_normal(*dim, cfg.m, seed)?;
            KernelMatrix::build(&s, cfg.eps, KernelMode::euclidean(*dim))?
        }
        TraceSample::Torus { density } => {
            let model = density.build()?;
            let s = model.sample(cfg.m, seed)?;
            KernelMatrix::build(&s, cfg.eps, KernelMode::periodic(*model.domain(), cfg.eps))?
        }
    })
}

pub fn run(cfg: &AssaTraceConfig, seed: u64) -> Result<TraceOutcome> {
    let k = build_kernel(cfg, seed)?;
    let fast = convergence_trace(&k, SinkhornAlgorithm::Assa, None, cfg.tol, cfg.assa_max_iter)?;
    let slow = convergence_trace(&k, SinkhornAlgorithm::Plain, None, cfg.tol, cfg.plain_max_iter)?;
    let mut opts = AssaOptions::absolute(cfg.tol, cfg.eps);
    opts.max_iter = cfg.assa_max_iter;
    let (w, report) = assa(&k, cfg.eps, &opts)?;
    let u0 = assa_initial(&k)?;
    let initial_distance = u0.iter().zip(&w.u).fold(0.0f64, |a, (x, y)| a.max((x / y).ln().abs()));
    let ratio = match (fast.iterations_to_tol, slow.iterations_to_tol) {
        (Some(a), Some(p)) => Some(p as f64 / a as f64),
        _ => None,
    };
    Ok(TraceOutcome {
        assa_tail_contraction: tail_contraction(&fast.residuals, CONTRACTION_WINDOW, CONTRACTION_NOISE_FLOOR),
        assa_iterations: fast.iterations_to_tol,
        plain_iterations: slow.iterations_to_tol,
        ratio,
        assa_residuals: fast.residuals,
        plain_residuals: slow.residuals,
        assa_report: (&report).into(),
        initial_distance,
        theoretical_bound: theoretical_contraction_bound(initial_distance).ok(),
    })
}

pub fn write(outcome: &TraceOutcome, cfg: &AssaTraceConfig, ctx: &RunContext) -> Result<()> {
    let dir = ctx.prepare()?;
    let prov = Provenance::new(config_hash(COMMAND, cfg), ctx.seed);
    let mut t = Table::new(&["iteration", "plain_residual", "assa_residual"]);
    let n = outcome.assa_residuals.len().max(outcome.plain_residuals.len());
    for i in 0..n {
        t.push(vec![
            (i + 1).to_string(),
            fmt_f64(outcome.plain_residuals.get(i).copied()),
            fmt_f64(outcome.assa_residuals.get(i).copied()),
        ]);
    }
    t.write(&dir.join("assa_trace.csv"), &prov)?;
    std::fs::write(dir.join("assa_trace.plt"), plot::trace_script("assa_trace.csv", cfg.tol))?;
    let json = serde_json::json!({
        "command": COMMAND,
        "provenance": prov,
        "config": cfg,
        "assa_iterations": outcome.assa_iterations,
        "plain_iterations": outcome.plain_iterations,
        "ratio": outcome.ratio,
        "assa_tail_contraction": outcome.assa_tail_contraction,
        "assa_report": outcome.assa_report,
        "initial_distance": outcome.initial_distance,
        "theoretical_bound": outcome.theoretical_bound,
    });
    write_json(&dir.join("assa_trace.json"), &json)
}
