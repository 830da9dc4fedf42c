//! Eigendata of the normalized operator, eigenvalue conventions, Nyström
//! extension and merging of degenerate eigenspaces.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{sym_eigen, top_eigenpairs, LanczosOptions};
use crate::normalization::{symmetrize, NormalizationKind, NormalizedOperator};
use crate::reference::Cluster;
use crate::{Error, Result};

/// Nyström extension refuses eigenvalues below this.
pub const NYSTROM_MU_MIN: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Matrices up to this size use the dense eigensolver.
    pub dense_threshold: usize,
    pub lanczos: LanczosOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { dense_threshold: 1200, lanczos: LanczosOptions::default() }
    }
}

/// Top eigenpairs of `P`.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eps: f64,
    pub kind: NormalizationKind,
    /// `mu_0 >= mu_1 >= ...`
    pub semigroup_eigs: Vec<f64>,
    /// `-ln(mu) / eps`, `+inf` where `mu <= 0`.
    pub generator_eigs: Vec<f64>,
    /// `(1 - mu) / eps`.
    pub laplacian_eigs: Vec<f64>,
    /// Marks eigenvalues with `mu <= 0`.
    pub nonpositive: Vec<bool>,
    /// Eigenvectors of `P` at the sample points, normalized so that
    /// `(1/M) sum_i phi_i^2 u_i / v_i = 1`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Weights `u_i / v_i` of the inner product in which `P` is self-adjoint.
    pub inner_weights: Vec<f64>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.semigroup_eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.semigroup_eigs.is_empty()
    }

    /// `(1/M) sum_i f_i g_i u_i / v_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let m = f.len() as f64;
        f.iter().zip(g).zip(&self.inner_weights).map(|((a, b), w)| a * b * w).sum::<f64>() / m
    }
}

/// `lambda = -ln(mu) / eps`; returns `(+inf, true)` when `mu <= 0`.
pub fn to_generator(mu: f64, eps: f64) -> (f64, bool) {
    if mu <= 0.0 {
        (f64::INFINITY, true)
    } else {
        (-mu.ln() / eps, false)
    }
}

/// `lambda~ = (1 - mu) / eps`.
pub fn to_graph_laplacian(mu: f64, eps: f64) -> f64 {
    (1.0 - mu) / eps
}

/// Top-`k` eigenpairs of `P` through its symmetric conjugate.
pub fn eigensolve(op: &NormalizedOperator, k: usize, opts: &EigenOptions) -> Result<SpectralResult> {
    let m = op.len();
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(alloc::format!("requested {k} eigenpairs of a {m}x{m} operator")));
    }
    let sym = symmetrize(op);
    let (values, raw): (Vec<f64>, Vec<Vec<f64>>) = if m <= opts.dense_threshold {
        let eig = sym_eigen(&sym.matrix(), m)?;
        (0..k).map(|r| (eig.values[m - 1 - r], eig.vector(m - 1 - r).to_vec())).unzip()
    } else {
        let mut lopts = opts.lanczos.clone();
        lopts.block = lopts.block.max(k.clamp(2, 8));
        let pairs = top_eigenpairs(&sym, k, &lopts)?;
        (pairs.values, pairs.vectors)
    };
    let eps = op.eps();
    let scale = (m as f64).sqrt();
    let eigenvectors = raw
        .into_iter()
        .map(|y| {
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut phi = sym.to_p_coordinates(&y);
            // sign gauge: largest entry positive (first on ties)
            let pivot = phi.iter().enumerate().fold(0, |b, (i, v)| if v.abs() > phi[b].abs() { i } else { b });
            let sign = if phi[pivot] < 0.0 { -1.0 } else { 1.0 };
            phi.iter_mut().for_each(|v| *v *= sign * scale / nrm);
            phi
        })
        .collect();
    let weights = op.weights();
    let inner_weights = weights.u.iter().zip(&weights.v).map(|(u, v)| u / v).collect();
    let (generator_eigs, nonpositive) = values.iter().map(|&mu| to_generator(mu, eps)).unzip();
    Ok(SpectralResult {
        eps,
        kind: op.kind(),
        laplacian_eigs: values.iter().map(|&mu| to_graph_laplacian(mu, eps)).collect(),
        semigroup_eigs: values,
        generator_eigs,
        nonpositive,
        eigenvectors,
        inner_weights,
    })
}

/// Evaluate the eigenfunction `phi(x) = V(x) sum_i k(x, x_i) u_i vec_i / (M mu)`
/// at query points (row-major, `d` coordinates each). For both weight
/// families the left weight is `V(x) = 1 / sum_i k(x, x_i) u_i / M`.
pub fn nystrom_extend(op: &NormalizedOperator, mu: f64, vec: &[f64], queries: &[f64]) -> Result<Vec<f64>> {
    if !(mu > NYSTROM_MU_MIN) {
        return Err(Error::IllConditioned { mu });
    }
    let k = op.kernel();
    let m = k.len();
    if vec.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: vec.len() });
    }
    let d = k.mode().dim();
    if !queries.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d, found: queries.len() % d });
    }
    let u = &op.weights().u;
    let uvec: Vec<f64> = u.iter().zip(vec).map(|(a, b)| a * b).collect();
    queries
        .chunks(d)
        .map(|x| {
            let row = k.out_of_sample_row(x)?;
            let ku: f64 = row.iter().zip(u).map(|(a, b)| a * b).sum();
            if !(ku > 0.0) {
                return Err(Error::NumericalFailure(alloc::format!("kernel mass vanishes at {x:?}")));
            }
            let num: f64 = row.iter().zip(&uvec).map(|(a, b)| a * b).sum();
            Ok(num / (ku * mu))
        })
        .collect()
}

/// Computed eigenpairs grouped by reference cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedEigenspaces {
    /// Indices into the computed eigenpairs, one group per reference cluster.
    pub groups: Vec<Vec<usize>>,
    /// Computed indices lying within `gap_tol` of two reference clusters.
    pub ambiguous: Vec<usize>,
}

/// Assign computed eigenpairs (ascending generator eigenvalues) to reference
/// clusters in order, each cluster taking as many as its multiplicity.
/// Clusters that cannot be filled completely are dropped.
pub fn merge_by_reference(computed: &[f64], reference: &[Cluster], gap_tol: f64) -> MergedEigenspaces {
    let mut groups = Vec::new();
    let mut next = 0;
    for c in reference {
        if next + c.multiplicity > computed.len() {
            break;
        }
        groups.push((next..next + c.multiplicity).collect());
        next += c.multiplicity;
    }
    let ambiguous = computed
        .iter()
        .enumerate()
        .filter(|(_, &lam)| reference.iter().filter(|c| (lam - c.value).abs() <= gap_tol).count() > 1)
        .map(|(i, _)| i)
        .collect();
    MergedEigenspaces { groups, ambiguous }
}

/// Vectors of a merged group.
pub fn group_vectors(result: &SpectralResult, group: &[usize]) -> Vec<Vec<f64>> {
    group.iter().map(|&i| result.eigenvectors[i].clone()).collect()
}

/// Residual `||P phi - mu phi||_inf / ||phi||_inf` of pair `j`.
pub fn eigen_residual(op: &NormalizedOperator, result: &SpectralResult, j: usize) -> f64 {
    let phi = &result.eigenvectors[j];
    let pphi = op.apply(phi);
    let mu = result.semigroup_eigs[j];
    let num = pphi.iter().zip(phi).fold(0.0f64, |a, (p, f)| a.max((p - mu * f).abs()));
    let den = phi.iter().fold(0.0f64, |a, f| a.max(f.abs()));
    num / den
}

/// `mu = exp(-eps lambda)`, the inverse of [`to_generator`].
pub fn semigroup_from_generator(lambda: f64, eps: f64) -> f64 {
    (-eps * lambda).exp()
}
