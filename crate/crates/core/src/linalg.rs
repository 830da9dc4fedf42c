//! Small dense linear algebra kit: symmetric eigensolver (Householder
//! tridiagonalization followed by implicit QL), a block Krylov top-k
//! eigensolver with full reorthogonalization, and Cholesky factorization.
//!
//! Square matrices are plain slices of length `n * n`. Symmetric inputs may be
//! read in either order; eigenvector outputs are stored column by column so
//! that eigenvector `j` is the contiguous slice `j * n .. (j + 1) * n`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::{Error, Result};

/// Full eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub n: usize,
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column-major.
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.n..(j + 1) * self.n]
    }
}

/// Eigendecomposition of the symmetric `n x n` matrix `a`.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<SymEigen> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    if n == 0 {
        return Ok(SymEigen { n, values: Vec::new(), vectors: Vec::new() });
    }
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&v[i * n..(i + 1) * n]);
    }
    Ok(SymEigen { n, values, vectors })
}

// `v` is addressed column-major: element (row r, column c) is v[c * n + r].
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |r: usize, c: usize| c * n + r;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    let vkj = v[idx(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence(alloc::format!(
                        "tridiagonal QL did not converge for eigenvalue {l}"
                    )));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (left, right) = v.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_i1 = &mut right[..n];
                    for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// A symmetric linear operator available only through products.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Wraps a closure as a [`SymOperator`].
pub struct FnOperator<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&[f64], &mut [f64])> SymOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// Dense symmetric matrix as an operator.
pub struct DenseSym<'a> {
    pub n: usize,
    pub a: &'a [f64],
}

impl SymOperator for DenseSym<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&self.a[i * self.n..(i + 1) * self.n], x);
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Block size; must be at least the multiplicity of any eigenvalue that
    /// is split by the `k` boundary.
    pub block: usize,
    /// Relative residual tolerance `||S x - theta x|| <= tol * max|theta|`.
    pub tol: f64,
    /// Largest Krylov basis before giving up.
    pub max_basis: usize,
    /// Seed for the starting block.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { block: 2, tol: 1e-11, max_basis: 3000, seed: 0x5eed }
    }
}

/// Extremal eigenpairs, largest first.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Largest relative residual among the returned pairs.
    pub residual: f64,
    pub basis_size: usize,
}

/// Largest `k` eigenpairs of a symmetric operator by block Krylov iteration
/// with full reorthogonalization and Rayleigh-Ritz extraction.
pub fn top_eigenpairs<O: SymOperator + ?Sized>(op: &O, k: usize, opts: &LanczosOptions) -> Result<Eigenpairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(alloc::format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    let block = opts.block.max(1).min(n);
    let max_basis = opts.max_basis.max(k + block).min(n);
    let mut rng = crate::density::rng_for(opts.seed, 0);

    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<Vec<f64>> = Vec::new();
    // h[j][i] = q_i . S q_j for i <= j
    let mut h: Vec<Vec<f64>> = Vec::new();

    let mut candidates: Vec<Vec<f64>> =
        (0..block).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let mut next_check = (2 * k + block).max(20).min(max_basis);

    loop {
        let start = q.len();
        for c in candidates.drain(..) {
            if q.len() == max_basis {
                break;
            }
            let mut c = c;
            if !orthonormalize_against(&q, &mut c) {
                // Krylov space exhausted in this direction; restart with noise.
                let mut fresh: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                if !orthonormalize_against(&q, &mut fresh) {
                    continue;
                }
                c = fresh;
            }
            q.push(c);
        }
        if q.len() == start {
            break;
        }
        for j in start..q.len() {
            let mut y = vec![0.0; n];
            op.apply(&q[j], &mut y);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure("operator produced a non-finite value".into()));
            }
            h.push((0..=j).map(|i| dot(&q[i], &y)).collect());
            w.push(y);
        }
        let m = q.len();
        if m >= next_check || m == max_basis {
            let pairs = rayleigh_ritz(&q, &w, &h, k)?;
            if pairs.residual <= opts.tol || m == n {
                return Ok(pairs);
            }
            if m == max_basis {
                return Err(Error::NoConvergence(alloc::format!(
                    "block Krylov basis reached {m} vectors with relative residual {:.3e}",
                    pairs.residual
                )));
            }
            next_check = ((m as f64 * 1.25) as usize).max(m + block).min(max_basis);
        }
        candidates = w[start..].to_vec();
    }
    let pairs = rayleigh_ritz(&q, &w, &h, k)?;
    Ok(pairs)
}

fn rayleigh_ritz(q: &[Vec<f64>], w: &[Vec<f64>], h: &[Vec<f64>], k: usize) -> Result<Eigenpairs> {
    let m = q.len();
    let n = q[0].len();
    let mut hm = vec![0.0; m * m];
    for j in 0..m {
        for i in 0..=j {
            hm[i * m + j] = h[j][i];
            hm[j * m + i] = h[j][i];
        }
    }
    let eig = sym_eigen(&hm, m)?;
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let k = k.min(m);
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residual: f64 = 0.0;
    for r in 0..k {
        let col = m - 1 - r;
        let theta = eig.values[col];
        let y = eig.vector(col);
        let mut x = vec![0.0; n];
        let mut sx = vec![0.0; n];
        for (l, &yl) in y.iter().enumerate() {
            axpy(yl, &q[l], &mut x);
            axpy(yl, &w[l], &mut sx);
        }
        let res = sx.iter().zip(&x).map(|(a, b)| (a - theta * b) * (a - theta * b)).sum::<f64>().sqrt();
        residual = residual.max(res / scale);
        values.push(theta);
        vectors.push(x);
    }
    Ok(Eigenpairs { values, vectors, residual, basis_size: m })
}

/// Two passes of Gram-Schmidt against `basis`, then normalize. Returns false
/// if the vector is numerically inside the span.
fn orthonormalize_against(basis: &[Vec<f64>], x: &mut [f64]) -> bool {
    let norm0 = norm(x);
    if norm0 == 0.0 || !norm0.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, x);
            axpy(-c, b, x);
        }
    }
    let nrm = norm(x);
    if nrm <= 1e-10 * norm0 {
        return false;
    }
    for v in x.iter_mut() {
        *v /= nrm;
    }
    true
}

/// Cholesky factor `L` (row-major, lower triangular) with `A = L L^T`.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: a.len() });
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NumericalFailure(alloc::format!(
                        "matrix is not positive definite (pivot {s:.3e} at {i})"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solve `L x = b` in place.
pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s = b[i] - dot(&l[i * n..i * n + i], &b[..i]);
        b[i] = s / l[i * n + i];
    }
}

/// Solve `L^T x = b` in place.
pub fn solve_lower_transpose(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        b[i] /= l[i * n + i];
        let bi = b[i];
        for (bj, &lij) in b[..i].iter_mut().zip(&l[i * n..i * n + i]) {
            *bj -= lij * bi;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators keep the loop vectorizable
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sym(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::density::rng_for(seed, 0);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = rng.random::<f64>() - 0.5;
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    #[test]
    fn two_by_two() {
        let e = sym_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] - 3.0).abs() < 1e-15);
        let v = e.vector(1);
        assert!((v[0].abs() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((v[0] - v[1]).abs() < 1e-15);
    }

    #[test]
    fn one_by_one_and_diagonal() {
        let e = sym_eigen(&[5.0], 1).unwrap();
        assert_eq!(e.values, vec![5.0]);
        let e = sym_eigen(&[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0], 3).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn reconstruction() {
        let n = 40;
        let a = random_sym(n, 1);
        let e = sym_eigen(&a, n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|l| e.values[l] * e.vector(l)[i] * e.vector(l)[j]).sum();
                assert!((s - a[i * n + j]).abs() < 1e-13);
            }
        }
        for l in 0..n {
            for m in 0..n {
                let d = dot(e.vector(l), e.vector(m));
                let expected = if l == m { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn krylov_matches_dense() {
        let n = 150;
        let a = random_sym(n, 2);
        let dense = sym_eigen(&a, n).unwrap();
        let op = DenseSym { n, a: &a };
        let opts = LanczosOptions { block: 3, tol: 1e-10, ..Default::default() };
        let top = top_eigenpairs(&op, 5, &opts).unwrap();
        for r in 0..5 {
            assert!((top.values[r] - dense.values[n - 1 - r]).abs() < 1e-9);
        }
    }

    #[test]
    fn krylov_resolves_multiplicity() {
        // diag(1, 1, 1/3, 1/4, ...) rotated
        let n = 60;
        let mut d: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        d[1] = d[0];
        let q = sym_eigen(&random_sym(n, 3), n).unwrap();
        let mut a = vec![0.0; n * n];
        for l in 0..n {
            let v = q.vector(l);
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] += d[l] * v[i] * v[j];
                }
            }
        }
        let op = DenseSym { n, a: &a };
        let top = top_eigenpairs(&op, 3, &LanczosOptions::default()).unwrap();
        assert!((top.values[0] - 1.0).abs() < 1e-10);
        assert!((top.values[1] - 1.0).abs() < 1e-10);
        assert!((top.values[2] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cholesky_solves() {
        let n = 20;
        let b = random_sym(n, 4);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|l| b[i * n + l] * b[j * n + l]).sum::<f64>();
            }
            a[i * n + i] += 1.0;
        }
        let l = cholesky(&a, n).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut x = rhs.clone();
        solve_lower(&l, n, &mut x);
        solve_lower_transpose(&l, n, &mut x);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert!((ax - rhs[i]).abs() < 1e-10);
        }
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    }
}
