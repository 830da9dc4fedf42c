//! Error measures: eigenvalue errors, distances between subspaces and
//! log-log rate fits.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, sym_eigen};
use crate::reference::Cluster;
use crate::spectral::SpectralResult;
use crate::{Error, Result};

/// Error of one computed eigenvalue against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvalueError {
    pub index: usize,
    /// Reference cluster the eigenvalue belongs to.
    pub cluster: usize,
    pub reference: f64,
    pub computed: f64,
    /// `|lambda_k - lambda_ref|`.
    pub err_lambda: f64,
    /// `|lambda~_k - lambda_ref|`.
    pub err_lambda_tilde: f64,
}

/// Errors of the first `k_max` eigenvalues. Within a degenerate cluster the
/// computed and reference values are matched in sorted order.
pub fn eigenvalue_errors(
    computed: &SpectralResult,
    reference: &[f64],
    clusters: &[Cluster],
    k_max: usize,
) -> Result<Vec<EigenvalueError>> {
    if computed.len() < k_max || reference.len() < k_max {
        return Err(Error::InvalidParameter(alloc::format!(
            "need {k_max} eigenvalues, have {} computed and {} reference",
            computed.len(),
            reference.len()
        )));
    }
    let cluster_of = |i: usize| clusters.iter().position(|c| c.range().contains(&i)).unwrap_or(usize::MAX);
    Ok((0..k_max)
        .map(|i| EigenvalueError {
            index: i,
            cluster: cluster_of(i),
            reference: reference[i],
            computed: computed.generator_eigs[i],
            err_lambda: (computed.generator_eigs[i] - reference[i]).abs(),
            err_lambda_tilde: (computed.laplacian_eigs[i] - reference[i]).abs(),
        })
        .collect())
}

/// Error of a whole cluster: `|mean(computed) - reference value|`.
pub fn cluster_error(computed: &[f64], cluster: &Cluster) -> f64 {
    let vals = &computed[cluster.range()];
    (vals.iter().sum::<f64>() / vals.len() as f64 - cluster.value).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    SupGrid,
    WeightedL2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDistanceReport {
    /// The symmetric distance (the lower bound for `SupGrid`).
    pub value: f64,
    /// Certified bounds on the symmetric distance (equal for `WeightedL2`).
    pub lower: f64,
    pub upper: f64,
    /// One-sided gaps `(A -> B, B -> A)`.
    pub one_sided: (f64, f64),
    pub norm_kind: NormKind,
    pub dim_a: usize,
    pub dim_b: usize,
    pub points: usize,
}

fn check_vectors(a: &[Vec<f64>]) -> Result<usize> {
    let n = a.first().map(|v| v.len()).ok_or(Error::RankDeficient { rank: 0, expected: 1 })?;
    if a.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.iter().map(|v| v.len()).find(|&l| l != n).unwrap(),
        });
    }
    Ok(n)
}

/// Orthonormal basis for `<f, g> = sum_i w_i f_i g_i`.
pub fn orthonormalize(vectors: &[Vec<f64>], weights: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = check_vectors(vectors)?;
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.len() });
    }
    let ip = |f: &[f64], g: &[f64]| f.iter().zip(g).zip(weights).map(|((a, b), w)| a * b * w).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut x = v.clone();
        let n0 = ip(&x, &x).sqrt();
        for _ in 0..2 {
            for b in &basis {
                let c = ip(b, &x);
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi -= c * bi);
            }
        }
        let nrm = ip(&x, &x).sqrt();
        if !(nrm > 1e-10 * n0) || n0 == 0.0 {
            return Err(Error::RankDeficient { rank: basis.len(), expected: vectors.len() });
        }
        x.iter_mut().for_each(|xi| *xi /= nrm);
        basis.push(x);
    }
    Ok(basis)
}

/// `sup_{a in A, |a| = 1} dist(a, B)` for weighted-orthonormal bases.
fn weighted_gap(qa: &[Vec<f64>], qb: &[Vec<f64>], weights: &[f64]) -> f64 {
    let ip = |f: &[f64], g: &[f64]| f.iter().zip(g).zip(weights).map(|((a, b), w)| a * b * w).sum::<f64>();
    // residuals of A's basis after projection onto B
    let res: Vec<Vec<f64>> = qa
        .iter()
        .map(|a| {
            let mut r = a.clone();
            for b in qb {
                let c = ip(b, a);
                r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= c * bi);
            }
            r
        })
        .collect();
    let p = res.len();
    let mut g = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let v = ip(&res[i], &res[j]);
            g[i * p + j] = v;
            g[j * p + i] = v;
        }
    }
    let top = sym_eigen(&g, p).map(|e| e.values[p - 1]).unwrap_or(f64::NAN);
    top.max(0.0).sqrt().min(1.0)
}

/// Symmetric gap between spans under a weighted `L^2` inner product (uniform
/// `1/M` weights give `L^2(rho^M)`). Equals `sin(theta)` for two lines at
/// angle `theta`.
pub fn weighted_l2_distance(a: &[Vec<f64>], b: &[Vec<f64>], weights: &[f64]) -> Result<SubspaceDistanceReport> {
    let n = check_vectors(a)?;
    if check_vectors(b)? != n {
        return Err(Error::DimensionMismatch { expected: n, found: b[0].len() });
    }
    let qa = orthonormalize(a, weights)?;
    let qb = orthonormalize(b, weights)?;
    let ab = weighted_gap(&qa, &qb, weights);
    let ba = weighted_gap(&qb, &qa, weights);
    let value = ab.max(ba);
    Ok(SubspaceDistanceReport {
        value,
        lower: value,
        upper: value,
        one_sided: (ab, ba),
        norm_kind: NormKind::WeightedL2,
        dim_a: a.len(),
        dim_b: b.len(),
        points: n,
    })
}

#[derive(Debug, Clone)]
pub struct SupOptions {
    /// Random directions sampled in each unit ball, besides the basis vectors.
    pub directions: usize,
    pub seed: u64,
    /// Relative gap between the Lawson bounds at which the inner problem stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SupOptions {
    fn default() -> Self {
        Self { directions: 32, seed: 17, tol: 1e-8, max_iter: 2000 }
    }
}

/// `min_c ||e - F c||_inf` by Lawson's iteratively reweighted least squares.
/// Returns certified `(lower, upper)` bounds.
pub fn chebyshev_residual(e: &[f64], f: &[Vec<f64>], tol: f64, max_iter: usize) -> (f64, f64) {
    let n = e.len();
    let q = f.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for _ in 0..max_iter {
        // weighted normal equations (q is tiny)
        let mut g = vec![0.0; q * q];
        let mut rhs = vec![0.0; q];
        for i in 0..q {
            for j in 0..=i {
                let v: f64 = (0..n).map(|t| w[t] * f[i][t] * f[j][t]).sum();
                g[i * q + j] = v;
                g[j * q + i] = v;
            }
            rhs[i] = (0..n).map(|t| w[t] * f[i][t] * e[t]).sum();
        }
        let c = solve_small_spd(&g, &rhs, q);
        let r: Vec<f64> = (0..n).map(|t| e[t] - (0..q).map(|i| c[i] * f[i][t]).sum::<f64>()).collect();
        let wls = (0..n).map(|t| w[t] * r[t] * r[t]).sum::<f64>().sqrt();
        let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        lo = lo.max(wls);
        hi = hi.min(rmax);
        if hi - lo <= tol * hi.max(f64::MIN_POSITIVE) {
            break;
        }
        let mut s = 0.0;
        for t in 0..n {
            w[t] *= r[t].abs();
            s += w[t];
        }
        if !(s > 0.0) {
            break;
        }
        w.iter_mut().for_each(|x| *x /= s);
    }
    (lo.min(hi), hi)
}

/// Solve a small symmetric positive semi-definite system through its
/// eigendecomposition, discarding directions below `1e-14` of the largest.
fn solve_small_spd(g: &[f64], rhs: &[f64], q: usize) -> Vec<f64> {
    let mut c = vec![0.0; q];
    let Ok(eig) = sym_eigen(g, q) else { return c };
    let top = eig.values.last().copied().unwrap_or(0.0);
    for j in 0..q {
        if eig.values[j] > 1e-14 * top {
            let v = eig.vector(j);
            let coef = dot(v, rhs) / eig.values[j];
            c.iter_mut().zip(v).for_each(|(ci, vi)| *ci += coef * vi);
        }
    }
    c
}

fn sup_one_sided(a: &[Vec<f64>], b: &[Vec<f64>], opts: &SupOptions, stream: u64) -> Result<(f64, f64)> {
    let n = a[0].len();
    let uniform = vec![1.0 / n as f64; n];
    let qa = orthonormalize(a, &uniform)?;
    let qb = orthonormalize(b, &uniform)?;
    // upper bound: e = Qa c with |c|_2 = |e|_L2 <= |e|_inf <= 1, and the
    // L2 projection onto B is one admissible approximant
    let ip = |f: &[f64], g: &[f64]| f.iter().zip(g).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    let res: Vec<Vec<f64>> = qa
        .iter()
        .map(|e| {
            let mut r = e.clone();
            for f in &qb {
                let c = ip(f, e);
                r.iter_mut().zip(f).for_each(|(ri, fi)| *ri -= c * fi);
            }
            r
        })
        .collect();
    let upper = (0..n).map(|t| res.iter().map(|r| r[t] * r[t]).sum::<f64>().sqrt()).fold(0.0f64, f64::max);

    let mut rng = crate::density::rng_for(opts.seed, stream);
    let p = qa.len();
    let mut dirs: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..opts.directions {
        dirs.push((0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
    }
    let mut lower: f64 = 0.0;
    for c in dirs {
        let mut e = vec![0.0; n];
        for (ci, q) in c.iter().zip(&qa) {
            e.iter_mut().zip(q).for_each(|(ei, qi)| *ei += ci * qi);
        }
        let emax = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if emax == 0.0 {
            continue;
        }
        e.iter_mut().for_each(|v| *v /= emax);
        let (lo, _) = chebyshev_residual(&e, &qb, opts.tol, opts.max_iter);
        lower = lower.max(lo);
    }
    Ok((lower.min(upper), upper))
}

/// Symmetric sup-norm distance between two spans on an evaluation grid,
/// with the outer supremum bracketed by sampled directions (lower) and a
/// projection bound (upper).
pub fn sup_grid_distance(a: &[Vec<f64>], b: &[Vec<f64>], opts: &SupOptions) -> Result<SubspaceDistanceReport> {
    let n = check_vectors(a)?;
    if check_vectors(b)? != n {
        return Err(Error::DimensionMismatch { expected: n, found: b[0].len() });
    }
    let (ab_lo, ab_hi) = sup_one_sided(a, b, opts, 0)?;
    let (ba_lo, ba_hi) = sup_one_sided(b, a, opts, 1)?;
    let lower = ab_lo.max(ba_lo);
    Ok(SubspaceDistanceReport {
        value: lower,
        lower,
        upper: ab_hi.max(ba_hi),
        one_sided: (ab_lo, ba_lo),
        norm_kind: NormKind::SupGrid,
        dim_a: a.len(),
        dim_b: b.len(),
        points: n,
    })
}

/// Dispatch on `kind`; `weights` are required for `WeightedL2`.
pub fn subspace_distance(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    kind: NormKind,
    weights: Option<&[f64]>,
) -> Result<SubspaceDistanceReport> {
    match kind {
        NormKind::WeightedL2 => {
            let n = check_vectors(a)?;
            let uniform;
            let w = match weights {
                Some(w) => w,
                None => {
                    uniform = vec![1.0 / n as f64; n];
                    &uniform
                }
            };
            weighted_l2_distance(a, b, w)
        }
        NormKind::SupGrid => sup_grid_distance(a, b, &SupOptions::default()),
    }
}

/// Least-squares line through `(ln eps, ln err)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_rate(eps: &[f64], err: &[f64]) -> Result<RateFit> {
    if eps.len() != err.len() {
        return Err(Error::DimensionMismatch { expected: eps.len(), found: err.len() });
    }
    if eps.len() < 3 {
        return Err(Error::InvalidParameter("a rate fit needs at least 3 points".into()));
    }
    if let Some(bad) = err.iter().chain(eps).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(alloc::format!("log-log fit needs positive finite values, got {bad}")));
    }
    let points: Vec<(f64, f64)> = eps.iter().zip(err).map(|(e, r)| (e.ln(), r.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all eps values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit { slope, intercept, residual_rms, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_spans() {
        let a = vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 0.0, 1.0]];
        let w = vec![0.25; 4];
        let r = weighted_l2_distance(&a, &a, &w).unwrap();
        assert!(r.value < 1e-14);
        let s = sup_grid_distance(&a, &a, &SupOptions::default()).unwrap();
        assert!(s.upper < 1e-12);
    }

    #[test]
    fn lines_at_angle() {
        let theta = 0.3f64;
        let a = vec![vec![1.0, 0.0]];
        let b = vec![vec![theta.cos(), theta.sin()]];
        let r = weighted_l2_distance(&a, &b, &[1.0, 1.0]).unwrap();
        assert!((r.value - theta.sin()).abs() < 1e-15);
    }

    #[test]
    fn containment_is_asymmetric() {
        // three-point grid, cos and sin of 2 pi x at x = 0, 1/3, 2/3
        let x = [0.0, 1.0 / 3.0, 2.0 / 3.0];
        let tau = 2.0 * core::f64::consts::PI;
        let c: Vec<f64> = x.iter().map(|t| (tau * t).cos()).collect();
        let s: Vec<f64> = x.iter().map(|t| (tau * t).sin()).collect();
        let w = vec![1.0 / 3.0; 3];
        let r = weighted_l2_distance(std::slice::from_ref(&c), &[c.clone(), s.clone()], &w).unwrap();
        assert!(r.one_sided.0 < 1e-15);
        assert!((r.one_sided.1 - 1.0).abs() < 1e-15);
        assert!((r.value - 1.0).abs() < 1e-15);
        let sup = sup_grid_distance(std::slice::from_ref(&c), &[c.clone(), s], &SupOptions::default()).unwrap();
        assert!(sup.one_sided.0 < 1e-12);
        assert!(sup.lower > 0.1 && sup.lower <= sup.upper);
    }

    #[test]
    fn chebyshev_constant_fit() {
        // best constant approximation of (0, 1, 2) has error 1
        let (lo, hi) = chebyshev_residual(&[0.0, 1.0, 2.0], &[vec![1.0, 1.0, 1.0]], 1e-10, 5000);
        assert!(lo <= 1.0 + 1e-12 && hi >= 1.0 - 1e-12);
        assert!(hi - 1.0 < 1e-6);
    }

    #[test]
    fn exact_rates() {
        let eps = [1e-3, 1e-2, 1e-1];
        let lin: Vec<f64> = eps.iter().map(|e| 3.0 * e).collect();
        let quad: Vec<f64> = eps.iter().map(|e| 3.0 * e * e).collect();
        assert!((fit_rate(&eps, &lin).unwrap().slope - 1.0).abs() < 1e-12);
        assert!((fit_rate(&eps, &quad).unwrap().slope - 2.0).abs() < 1e-12);
        assert!(fit_rate(&eps[..2], &lin[..2]).is_err());
        assert!(fit_rate(&eps, &[1.0, 0.0, 1.0]).is_err());
    }
}
