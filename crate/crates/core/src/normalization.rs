//! Weights that turn a kernel matrix into a Markov operator.
//!
//! Two families are provided:
//!
//! * standard alpha-weights `u = (K 1)^{-alpha}`, `v = 1 / (K u)`, giving
//!   `P = diag(v) K diag(u)`;
//! * Sinkhorn weights solving `u . (K u) = 1`, giving the doubly stochastic
//!   `P = diag(u) K diag(u)`. They are computed either by the plain iteration
//!   `u <- 1 / (K u)` or by the accelerated symmetric Sinkhorn algorithm
//!   (ASSA), which follows two half-steps with a geometric mean and contracts
//!   roughly eight-fold per iteration.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::kernel::{KernelMatrix, KernelOperator};
use crate::linalg::SymOperator;
use crate::{Error, Result};

/// Fixed-point accuracy required before a Sinkhorn run reports convergence.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Row-sum deviation above which [`assemble_p`] rejects the weights.
pub const ASSEMBLY_TOL: f64 = 1e-8;
/// Residuals at or below this are treated as converged noise when estimating
/// tail contraction factors.
pub const CONTRACTION_NOISE_FLOOR: f64 = 1e-11;
/// Tail contraction ratios are measured once the residual drops below this.
pub const CONTRACTION_WINDOW: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationKind {
    Standard { alpha: f64 },
    Sinkhorn,
}

impl NormalizationKind {
    pub fn label(&self) -> alloc::string::String {
        match self {
            NormalizationKind::Standard { alpha } => alloc::format!("standard(alpha={alpha})"),
            NormalizationKind::Sinkhorn => "sinkhorn".into(),
        }
    }
}

/// Right weight `u` and left weight `v`; `P = diag(v) K diag(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub kind: NormalizationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkhornAlgorithm {
    Plain,
    Assa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornReport {
    pub algorithm: SinkhornAlgorithm,
    pub iterations: usize,
    /// Per-iteration residual: `||log(u_old / u_new)||_2` for ASSA, the
    /// fixed-point residual of the current estimate for plain iteration.
    pub residual_trace: Vec<f64>,
    /// `||u . (K u) - 1||_inf` of the returned weights.
    pub fixed_point_residual: f64,
    pub converged: bool,
    /// Largest tail ratio `r_{n+1} / r_n` once `r_n < 1e-4`, if any.
    pub tail_contraction: Option<f64>,
    /// Set when the tail contraction exceeds 0.5, a hint that `K` has
    /// eigenvalues near `-1`.
    pub slow_contraction: bool,
}

fn check_positive(x: &[f64], what: &str) -> Result<()> {
    match x.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        None => Ok(()),
        Some(i) => Err(Error::NumericalFailure(alloc::format!("{what} is {} at index {i}", x[i]))),
    }
}

fn row_sums_checked<K: KernelOperator + ?Sized>(k: &K) -> Result<Vec<f64>> {
    let rs = k.apply_vec(&vec![1.0; k.size()]);
    let bad: Vec<usize> =
        rs.iter().enumerate().filter(|(_, r)| !(**r > 0.0 && r.is_finite())).map(|(i, _)| i).collect();
    if bad.is_empty() {
        Ok(rs)
    } else {
        Err(Error::DegenerateRows(bad))
    }
}

/// `u = (K 1)^{-alpha}`, `v = 1 / (K u)`.
pub fn standard_weights<K: KernelOperator + ?Sized>(k: &K, alpha: f64) -> Result<WeightPair> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(alloc::format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let rs = row_sums_checked(k)?;
    let u: Vec<f64> = rs.iter().map(|r| r.powf(-alpha)).collect();
    let ku = k.apply_vec(&u);
    check_positive(&ku, "K u")?;
    let v = ku.iter().map(|x| 1.0 / x).collect();
    Ok(WeightPair { u, v, kind: NormalizationKind::Standard { alpha } })
}

/// `||u . (K u) - 1||_inf`.
pub fn fixed_point_residual<K: KernelOperator + ?Sized>(k: &K, u: &[f64]) -> f64 {
    let ku = k.apply_vec(u);
    u.iter().zip(&ku).fold(0.0f64, |m, (a, b)| m.max((a * b - 1.0).abs()))
}

/// Largest ratio `r_{n+1} / r_n` with `r_n < window` and `r_{n+1}` above the
/// noise floor.
pub fn tail_contraction(trace: &[f64], window: f64, floor: f64) -> Option<f64> {
    trace
        .windows(2)
        .filter(|w| w[0] < window && w[1] > floor && w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
}

fn finish_report<K: KernelOperator + ?Sized>(
    k: &K,
    u: &[f64],
    algorithm: SinkhornAlgorithm,
    trace: Vec<f64>,
    stopped: bool,
) -> SinkhornReport {
    let fixed_point_residual = fixed_point_residual(k, u);
    let tail = tail_contraction(&trace, CONTRACTION_WINDOW, CONTRACTION_NOISE_FLOOR);
    SinkhornReport {
        algorithm,
        iterations: trace.len(),
        converged: stopped && fixed_point_residual <= FIXED_POINT_TOL,
        fixed_point_residual,
        slow_contraction: tail.is_some_and(|t| t > 0.5),
        tail_contraction: tail,
        residual_trace: trace,
    }
}

/// `1 / sqrt(K 1)`, the ASSA starting point.
pub fn assa_initial<K: KernelOperator + ?Sized>(k: &K) -> Result<Vec<f64>> {
    Ok(row_sums_checked(k)?.iter().map(|r| 1.0 / r.sqrt()).collect())
}

/// Plain Sinkhorn iteration `u <- 1 / (K u)` from `u0`.
///
/// The iterates alternate between `c U` and `U / c` for an unknown constant
/// `c`, so the current estimate is the geometric mean of the last two
/// iterates; the residual is its fixed-point residual
/// `||u . (K u) - 1||_inf`, which costs one extra product per step.
/// Running out of iterations yields a non-converged report, not an error.
pub fn sinkhorn_plain<K: KernelOperator + ?Sized>(
    k: &K,
    u0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(WeightPair, SinkhornReport)> {
    let m = k.size();
    if u0.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: u0.len() });
    }
    check_positive(u0, "initial weight")?;
    row_sums_checked(k)?;
    let mut u = u0.to_vec();
    let mut est = u.clone();
    let mut ku = vec![0.0; m];
    let mut trace = Vec::new();
    let mut stopped = false;
    for _ in 0..max_iter {
        k.apply_to(&u, &mut ku);
        check_positive(&ku, "K u")?;
        for ((ui, kui), e) in u.iter_mut().zip(&ku).zip(est.iter_mut()) {
            let next = 1.0 / kui;
            *e = (*ui * next).sqrt();
            *ui = next;
        }
        let r = fixed_point_residual(k, &est);
        trace.push(r);
        if r <= tol {
            stopped = true;
            break;
        }
    }
    let report = finish_report(k, &est, SinkhornAlgorithm::Plain, trace, stopped);
    Ok((WeightPair { v: est.clone(), u: est, kind: NormalizationKind::Sinkhorn }, report))
}

/// Fixed-point residuals `||u . (K u) - 1||_inf` of a solver's estimate after
/// each iteration, for comparing solvers on a common scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub algorithm: SinkhornAlgorithm,
    pub residuals: Vec<f64>,
    /// First iteration (1-based) whose residual is at most the tolerance.
    pub iterations_to_tol: Option<usize>,
}

/// Run `algorithm` from `u0` (the ASSA start `1 / sqrt(K 1)` when absent)
/// until the fixed-point residual reaches `tol` or `max_iter` steps pass.
pub fn convergence_trace<K: KernelOperator + ?Sized>(
    k: &K,
    algorithm: SinkhornAlgorithm,
    u0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<ConvergenceTrace> {
    let start = match u0 {
        Some(u) => u.to_vec(),
        None => assa_initial(k)?,
    };
    let residuals = match algorithm {
        SinkhornAlgorithm::Plain => sinkhorn_plain(k, &start, tol, max_iter)?.1.residual_trace,
        SinkhornAlgorithm::Assa => {
            let m = k.size();
            if start.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: start.len() });
            }
            check_positive(&start, "initial weight")?;
            let mut u = start;
            let mut v = vec![0.0; m];
            let mut kv = vec![0.0; m];
            let mut out = Vec::new();
            for _ in 0..max_iter {
                assa_step(k, &mut u, &mut v, &mut kv)?;
                let r = fixed_point_residual(k, &u);
                out.push(r);
                if r <= tol {
                    break;
                }
            }
            out
        }
    };
    let iterations_to_tol = residuals.iter().position(|&r| r <= tol).map(|i| i + 1);
    Ok(ConvergenceTrace { algorithm, residuals, iterations_to_tol })
}

/// One ASSA step in place; returns `||log(u_old / u_new)||_2`.
fn assa_step<K: KernelOperator + ?Sized>(k: &K, u: &mut [f64], v: &mut [f64], kv: &mut [f64]) -> Result<f64> {
    k.apply_to(u, v);
    check_positive(v, "K u")?;
    v.iter_mut().for_each(|x| *x = 1.0 / *x);
    k.apply_to(v, kv);
    check_positive(kv, "K v")?;
    let mut r2 = 0.0;
    for ((ui, vi), kvi) in u.iter_mut().zip(v.iter()).zip(kv.iter()) {
        let new = (vi / kvi).sqrt();
        let l = (*ui / new).ln();
        r2 += l * l;
        *ui = new;
    }
    Ok(r2.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssaOptions {
    /// Stop once `||log(u_old / u)||_2 <= eps * tau`.
    pub tau: f64,
    pub max_iter: usize,
    /// Starting weights; `1 / sqrt(K 1)` when absent.
    pub u0: Option<Vec<f64>>,
}

impl AssaOptions {
    /// Defaults with `eps * tau = 1e-13 sqrt(M)` and 200 iterations.
    pub fn for_size(m: usize, eps: f64) -> Self {
        Self { tau: 1e-13 * (m as f64).sqrt() / eps, max_iter: 200, u0: None }
    }

    /// Stop at an absolute residual `tol` regardless of `eps`.
    pub fn absolute(tol: f64, eps: f64) -> Self {
        Self { tau: tol / eps, max_iter: 200, u0: None }
    }
}

/// Accelerated symmetric Sinkhorn algorithm:
/// `v <- 1 / (K u)`, `u <- sqrt(v / (K v))` until `||log(u_old / u)||_2 <= eps tau`.
pub fn assa<K: KernelOperator + ?Sized>(k: &K, eps: f64, opts: &AssaOptions) -> Result<(WeightPair, SinkhornReport)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("eps must be positive, got {eps}")));
    }
    if !(opts.tau > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("tau must be positive, got {}", opts.tau)));
    }
    let m = k.size();
    let mut u = match &opts.u0 {
        Some(u0) => {
            if u0.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: u0.len() });
            }
            check_positive(u0, "initial weight")?;
            row_sums_checked(k)?;
            u0.clone()
        }
        None => assa_initial(k)?,
    };
    let tol = eps * opts.tau;
    let mut v = vec![0.0; m];
    let mut kv = vec![0.0; m];
    let mut trace = Vec::new();
    let mut stopped = false;
    for _ in 0..opts.max_iter {
        let r = assa_step(k, &mut u, &mut v, &mut kv)?;
        trace.push(r);
        if r <= tol {
            stopped = true;
            break;
        }
    }
    let report = finish_report(k, &u, SinkhornAlgorithm::Assa, trace, stopped);
    Ok((WeightPair { v: u.clone(), u, kind: NormalizationKind::Sinkhorn }, report))
}

/// Per-iteration contraction bound `1/8 + k''` with `k' = k e^{4k}` and
/// `k'' = k' (2 + k'/2)`, valid for `k < 0.1` and `k'' < 3/8`.
pub fn theoretical_contraction_bound(k: f64) -> Result<f64> {
    if !(0.0..0.1).contains(&k) {
        return Err(Error::Domain(alloc::format!("k = {k} is outside [0, 0.1)")));
    }
    let k1 = k * (4.0 * k).exp();
    let k2 = k1 * (2.0 + 0.5 * k1);
    if k2 >= 0.375 {
        return Err(Error::Domain(alloc::format!("k'' = {k2} is not below 3/8")));
    }
    Ok(0.125 + k2)
}

/// The Markov operator `P = diag(v) K diag(u)`, stored as `K` plus weights.
#[derive(Debug, Clone)]
pub struct NormalizedOperator {
    k: KernelMatrix,
    weights: WeightPair,
    row_sums: Vec<f64>,
}

/// Check the weights against `K` and form `P`. Rows must sum to one within
/// `1e-8`; for Sinkhorn weights the stored form `K_ij (u_i u_j)` is exactly
/// symmetric.
pub fn assemble_p(k: KernelMatrix, weights: WeightPair) -> Result<NormalizedOperator> {
    let m = k.len();
    if weights.u.len() != m || weights.v.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: weights.u.len().min(weights.v.len()) });
    }
    check_positive(&weights.u, "u")?;
    check_positive(&weights.v, "v")?;
    let mut op = NormalizedOperator { k, weights, row_sums: Vec::new() };
    op.row_sums = op.apply(&vec![1.0; m]);
    let dev = op.row_sums.iter().fold(0.0f64, |a, r| a.max((r - 1.0).abs()));
    if !(dev <= ASSEMBLY_TOL) {
        return Err(Error::Assembly { max_deviation: dev });
    }
    Ok(op)
}

impl NormalizedOperator {
    pub fn kernel(&self) -> &KernelMatrix {
        &self.k
    }

    pub fn weights(&self) -> &WeightPair {
        &self.weights
    }

    pub fn kind(&self) -> NormalizationKind {
        self.weights.kind
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn eps(&self) -> f64 {
        self.k.eps()
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (u, v) = (&self.weights.u, &self.weights.v);
        match self.weights.kind {
            NormalizationKind::Sinkhorn => self.k.get(i, j) * (u[i] * u[j]),
            NormalizationKind::Standard { .. } => v[i] * self.k.get(i, j) * u[j],
        }
    }

    /// Dense row-major `P`.
    pub fn matrix(&self) -> Vec<f64> {
        let m = self.len();
        let mut p = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                p.push(self.entry(i, j));
            }
        }
        p
    }

    /// `P x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let ux: Vec<f64> = x.iter().zip(&self.weights.u).map(|(a, b)| a * b).collect();
        let mut y = self.k.apply_vec(&ux);
        y.iter_mut().zip(&self.weights.v).for_each(|(a, b)| *a *= b);
        y
    }

    /// `P^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let vx: Vec<f64> = x.iter().zip(&self.weights.v).map(|(a, b)| a * b).collect();
        let mut y = self.k.apply_vec(&vx);
        y.iter_mut().zip(&self.weights.u).for_each(|(a, b)| *a *= b);
        y
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.apply_transpose(&vec![1.0; self.len()])
    }
}

/// Symmetric conjugate `S = diag(s) P diag(s)^{-1} = diag(w) K diag(w)` with
/// `s = (u / v)^{1/2}` and `w = (u v)^{1/2}`.
///
/// If `S y = mu y` then `P (y / s) = mu (y / s)`.
#[derive(Debug, Clone)]
pub struct Symmetrized<'a> {
    op: &'a NormalizedOperator,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn symmetrize(op: &NormalizedOperator) -> Symmetrized<'_> {
    let (u, v) = (&op.weights.u, &op.weights.v);
    let (s, w) = match op.kind() {
        NormalizationKind::Sinkhorn => (vec![1.0; u.len()], u.clone()),
        NormalizationKind::Standard { .. } => (
            u.iter().zip(v).map(|(a, b)| (a / b).sqrt()).collect(),
            u.iter().zip(v).map(|(a, b)| (a * b).sqrt()).collect(),
        ),
    };
    Symmetrized { op, s, w }
}

impl Symmetrized<'_> {
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.op.k.get(i, j) * (self.w[i] * self.w[j])
    }

    /// Dense row-major `S`.
    pub fn matrix(&self) -> Vec<f64> {
        let m = self.op.len();
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            let row = self.op.k.row(i);
            let wi = self.w[i];
            out.extend(row.iter().zip(&self.w).map(|(kij, wj)| kij * (wi * wj)));
        }
        out
    }

    /// Map an eigenvector of `S` to the corresponding eigenvector of `P`.
    pub fn to_p_coordinates(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.s).map(|(a, b)| a / b).collect()
    }
}

impl SymOperator for Symmetrized<'_> {
    fn dim(&self) -> usize {
        self.op.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let wx: Vec<f64> = x.iter().zip(&self.w).map(|(a, b)| a * b).collect();
        self.op.k.apply_to(&wx, y);
        y.iter_mut().zip(&self.w).for_each(|(a, b)| *a *= b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Sample;
    use crate::kernel::KernelMode;
    use crate::torus::TorusDomain;

    /// Explicit small matrix used as a kernel operator.
    struct Dense(usize, Vec<f64>);

    impl KernelOperator for Dense {
        fn size(&self) -> usize {
            self.0
        }
        fn apply_to(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.0 {
                y[i] = (0..self.0).map(|j| self.1[i * self.0 + j] * x[j]).sum();
            }
        }
    }

    #[test]
    fn one_by_one() {
        let k = Dense(1, vec![4.0]);
        let (w, rep) = assa(&k, 1.0, &AssaOptions::for_size(1, 1.0)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(w.u, vec![0.5]);
        let (w, _) = sinkhorn_plain(&k, &[1.0], 1e-14, 10).unwrap();
        assert!((w.u[0] - 0.5).abs() < 1e-16);
    }

    #[test]
    fn symmetric_two_by_two() {
        let k = Dense(2, vec![2.0, 1.0, 1.0, 2.0]);
        let (w, rep) = assa(&k, 1.0, &AssaOptions::absolute(1e-13, 1.0)).unwrap();
        let e = 1.0 / 3f64.sqrt();
        assert!(rep.iterations <= 5);
        assert!(w.u.iter().all(|x| (x - e).abs() < 1e-15));
        let (w, rep) = sinkhorn_plain(&k, &[1.0, 1.0], 1e-13, 1000).unwrap();
        assert!(rep.converged);
        assert!(w.u.iter().all(|x| (x - e).abs() < 1e-15));
    }

    #[test]
    fn asymmetric_two_by_two() {
        // u1 (4 u1 + u2) = 1, u2 (u1 + u2) = 1 has the solution (1, 2)/sqrt(6)
        let k = Dense(2, vec![4.0, 1.0, 1.0, 1.0]);
        let s6 = 6f64.sqrt();
        let (w, rep) = assa(&k, 1.0, &AssaOptions::absolute(1e-14, 1.0)).unwrap();
        assert!(rep.converged);
        assert!((w.u[0] - 1.0 / s6).abs() < 1e-14 && (w.u[1] - 2.0 / s6).abs() < 1e-14);
        let (w, rep) = sinkhorn_plain(&k, &[1.0, 1.0], 1e-14, 10_000).unwrap();
        assert!(rep.converged);
        assert!((w.u[0] - 1.0 / s6).abs() < 1e-13 && (w.u[1] - 2.0 / s6).abs() < 1e-13);
    }

    #[test]
    fn standard_closed_form() {
        let k = Dense(2, vec![1.0, 0.5, 0.5, 1.0]);
        let w = standard_weights(&k, 0.5).unwrap();
        let e = (2.0f64 / 3.0).sqrt();
        assert!(w.u.iter().all(|x| (x - e).abs() < 1e-15));
        let ku = k.apply_vec(&w.u);
        for i in 0..2 {
            assert!((w.v[i] * ku[i] - 1.0).abs() < 1e-15);
        }
        let w0 = standard_weights(&k, 0.0).unwrap();
        assert_eq!(w0.u, vec![1.0, 1.0]);
        assert!(standard_weights(&k, 1.5).is_err());
    }

    #[test]
    fn degenerate_rows_are_named() {
        let k = Dense(3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(standard_weights(&k, 0.5), Err(Error::DegenerateRows(vec![1])));
        assert!(matches!(assa(&k, 1.0, &AssaOptions::for_size(3, 1.0)), Err(Error::DegenerateRows(_))));
    }

    #[test]
    fn plain_max_iter_is_not_an_error() {
        let k = Dense(2, vec![4.0, 1.0, 1.0, 1.0]);
        let (_, rep) = sinkhorn_plain(&k, &[1.0, 1.0], 1e-14, 2).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn contraction_bound_values() {
        assert_eq!(theoretical_contraction_bound(0.0).unwrap(), 0.125);
        let k1 = 0.01 * 0.04f64.exp();
        let expected = 0.125 + k1 * (2.0 + k1 / 2.0);
        assert_eq!(theoretical_contraction_bound(0.01).unwrap(), expected);
        assert!((expected - 0.14586).abs() < 1e-4);
        assert!(matches!(theoretical_contraction_bound(0.2), Err(Error::Domain(_))));
        // k = 0.099: k' = 0.1473, k'' = 0.3055 < 3/8, still admissible
        assert!(theoretical_contraction_bound(0.099).is_ok());
    }

    #[test]
    fn sinkhorn_assembly_is_doubly_stochastic() {
        let pts = vec![0.0, 0.1, 0.15, 0.6, 0.8];
        let s = Sample::from_points(Some(TorusDomain::unit(1)), 1, pts, 0).unwrap();
        let eps = 0.01;
        let k = KernelMatrix::build(&s, eps, KernelMode::periodic(TorusDomain::unit(1), eps)).unwrap();
        let (w, rep) = assa(&k, eps, &AssaOptions::for_size(5, eps)).unwrap();
        assert!(rep.converged);
        let p = assemble_p(k, w).unwrap();
        for (r, c) in p.row_sums().iter().zip(p.column_sums()) {
            assert!((r - 1.0).abs() < 1e-10 && (c - 1.0).abs() < 1e-10);
        }
        let m = p.matrix();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(m[i * 5 + j], m[j * 5 + i]);
            }
        }
        let sym = symmetrize(&p);
        assert_eq!(sym.matrix(), m);
    }

    #[test]
    fn mismatched_weights_rejected() {
        let s = Sample::from_points(Some(TorusDomain::unit(1)), 1, vec![0.1, 0.4], 0).unwrap();
        let k = KernelMatrix::build(&s, 0.05, KernelMode::periodic(TorusDomain::unit(1), 0.05)).unwrap();
        let w = WeightPair { u: vec![1.0, 1.0], v: vec![1.0, 1.0], kind: NormalizationKind::Sinkhorn };
        assert!(matches!(assemble_p(k, w), Err(Error::Assembly { .. })));
    }
}
