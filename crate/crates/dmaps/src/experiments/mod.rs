//! The four experiment commands. Each has a `run` function returning typed
//! results and a `write` function producing the CSV, plot script and JSON
//! files, so that tests can inspect results without parsing files.

pub mod assa_trace;
pub mod bias;
pub mod spectrum;
pub mod variance;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dmaps_core::kernel::KernelMatrix;
use dmaps_core::normalization::{
    assa, assemble_p, standard_weights, AssaOptions, NormalizationKind, NormalizedOperator, SinkhornReport,
};
use serde::Serialize;

/// Output directory and seed shared by all commands.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub seed: u64,
}

impl RunContext {
    pub fn new(out: impl Into<PathBuf>, seed: u64) -> Self {
        Self { out: out.into(), seed }
    }

    pub fn prepare(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

/// Normalize `k` with ASSA (default stopping rule) or standard weights.
pub fn normalize(k: KernelMatrix, kind: NormalizationKind) -> Result<(NormalizedOperator, Option<SinkhornReport>)> {
    let eps = k.eps();
    let (w, report) = match kind {
        NormalizationKind::Sinkhorn => {
            let (w, r) = assa(&k, eps, &AssaOptions::for_size(k.len(), eps))?;
            (w, Some(r))
        }
        NormalizationKind::Standard { alpha } => (standard_weights(&k, alpha)?, None),
    };
    Ok((assemble_p(k, w)?, report))
}

/// Independent seed for one trial, from the run seed and the trial's
/// coordinates (splitmix64 finalizer).
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Serializable view of a Sinkhorn report.
#[derive(Debug, Clone, Serialize)]
pub struct SinkhornSummary {
    pub algorithm: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub fixed_point_residual: f64,
    pub final_increment: Option<f64>,
    pub tail_contraction: Option<f64>,
    pub slow_contraction: bool,
}

impl From<&SinkhornReport> for SinkhornSummary {
    fn from(r: &SinkhornReport) -> Self {
        Self {
            algorithm: match r.algorithm {
                dmaps_core::normalization::SinkhornAlgorithm::Assa => "assa",
                dmaps_core::normalization::SinkhornAlgorithm::Plain => "plain",
            },
            iterations: r.iterations,
            converged: r.converged,
            fixed_point_residual: r.fixed_point_residual,
            final_increment: r.residual_trace.last().copied(),
            tail_contraction: r.tail_contraction,
            slow_contraction: r.slow_contraction,
        }
    }
}

/// Median of a nonempty slice.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[0, 0]);
        assert_eq!(a, derive_seed(1, &[0, 0]));
        assert_ne!(a, derive_seed(1, &[0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 0]));
    }

    #[test]
    fn median_and_mean() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&[1.0, 2.0]), 1.5);
    }
}
