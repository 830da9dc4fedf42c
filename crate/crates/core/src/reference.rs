//! Ground-truth spectra for one-dimensional densities, and their tensor
//! products for separable densities.
//!
//! Two kinds of reference are available:
//!
//! * the limiting generator `L_alpha phi = phi''/2 + (1 - alpha) (log rho)' phi'`,
//!   solved by a Galerkin method in the real trigonometric basis using the
//!   symmetric divergence form `-(w phi')' / 2 = lambda w phi` with
//!   `w = rho^{2 - 2 alpha}`;
//! * the finite-`eps` continuum operators (Sinkhorn or standard), discretized
//!   by collocation on a uniform grid with a spectrally exact periodic Gaussian
//!   convolution, so that the normalization solvers run on them unchanged.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::density::{unit_circle_table, DensityKind, DensityModel, TrigSeries, TrigTerm};
use crate::kernel::KernelOperator;
use crate::linalg::{cholesky, dot, solve_lower, solve_lower_transpose, top_eigenpairs, FnOperator, LanczosOptions};
use crate::normalization::{assa, standard_weights, AssaOptions, NormalizationKind, SinkhornReport};
use crate::{Error, Result};

/// Relative tolerance for grouping eigenvalues into degenerate clusters.
pub const CLUSTER_TOL: f64 = 1e-7;
pub const DEFAULT_N_MODES: usize = 2001;
pub const DEFAULT_N_GRID: usize = 2048;

/// The limiting generator being approximated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    /// `phi''/2 + (log rho)' phi' / 2`, the limit of Sinkhorn normalization.
    Langevin,
    /// `phi''/2 + (1 - alpha) (log rho)' phi'`, the limit of standard weights.
    Standard { alpha: f64 },
}

impl GeneratorKind {
    pub fn alpha(&self) -> f64 {
        match self {
            GeneratorKind::Langevin => 0.5,
            GeneratorKind::Standard { alpha } => *alpha,
        }
    }

    /// Generator whose eigenvalues a normalization converges to.
    pub fn limit_of(kind: NormalizationKind) -> Self {
        match kind {
            NormalizationKind::Sinkhorn => GeneratorKind::Langevin,
            NormalizationKind::Standard { alpha } => GeneratorKind::Standard { alpha },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorDescriptor {
    Generator(GeneratorKind),
    Convolution { eps: f64 },
    Multiplication,
}

/// Dense complex matrix in the Fourier basis `exp(2 pi i k x / L)`,
/// `|k| <= m`, with `n_modes = 2m + 1`. Entry `(k, l)` maps the coefficient
/// of mode `l` to mode `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOperator {
    pub n_modes: usize,
    pub side: f64,
    pub descriptor: OperatorDescriptor,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn check_modes(n_modes: usize) -> Result<usize> {
    if n_modes < 3 || n_modes.is_multiple_of(2) {
        return Err(Error::InvalidParameter(alloc::format!("n_modes must be odd and at least 3, got {n_modes}")));
    }
    Ok(n_modes / 2)
}

/// Complex Fourier coefficients `c_n = (1/N) sum_j f_j exp(-2 pi i n j / N)`
/// for `n = 0..=max_freq`, returned as `(re, im)`.
fn dft(values: &[f64], max_freq: usize) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let (ct, st) = unit_circle_table(n);
    let mut re = Vec::with_capacity(max_freq + 1);
    let mut im = Vec::with_capacity(max_freq + 1);
    for k in 0..=max_freq {
        let mut a = 0.0;
        let mut b = 0.0;
        let mut idx = 0usize;
        for &v in values {
            a += v * ct[idx];
            b -= v * st[idx];
            idx += k;
            if idx >= n {
                idx -= n;
            }
        }
        re.push(a / n as f64);
        im.push(b / n as f64);
    }
    (re, im)
}

fn fine_grid(n_modes: usize) -> usize {
    (16 * n_modes).next_power_of_two().max(4096)
}

impl FourierOperator {
    fn zeros(n_modes: usize, side: f64, descriptor: OperatorDescriptor) -> Self {
        Self { n_modes, side, descriptor, re: vec![0.0; n_modes * n_modes], im: vec![0.0; n_modes * n_modes] }
    }

    /// Entry for modes `k, l` in `-m..=m`.
    pub fn entry(&self, k: i64, l: i64) -> (f64, f64) {
        let m = (self.n_modes / 2) as i64;
        let idx = ((k + m) as usize) * self.n_modes + (l + m) as usize;
        (self.re[idx], self.im[idx])
    }

    fn set(&mut self, k: i64, l: i64, re: f64, im: f64) {
        let m = (self.n_modes / 2) as i64;
        let idx = ((k + m) as usize) * self.n_modes + (l + m) as usize;
        self.re[idx] = re;
        self.im[idx] = im;
    }

    /// Diagonal `exp(-eps (2 pi k / L)^2 / 2)`.
    pub fn convolution(side: f64, n_modes: usize, eps: f64) -> Result<Self> {
        let m = check_modes(n_modes)? as i64;
        let mut op = Self::zeros(n_modes, side, OperatorDescriptor::Convolution { eps });
        for k in -m..=m {
            let w = 2.0 * PI * k as f64 / side;
            op.set(k, k, (-0.5 * eps * w * w).exp(), 0.0);
        }
        Ok(op)
    }

    /// Toeplitz matrix of multiplication by a real trigonometric series.
    pub fn multiplication(series: &TrigSeries, n_modes: usize) -> Result<Self> {
        let m = check_modes(n_modes)? as i64;
        let mut op = Self::zeros(n_modes, series.side, OperatorDescriptor::Multiplication);
        let coef = |n: i64| -> (f64, f64) {
            let (a, b) = series.coefficient(n.unsigned_abs());
            if n == 0 {
                (a, 0.0)
            } else if n > 0 {
                (0.5 * a, -0.5 * b)
            } else {
                (0.5 * a, 0.5 * b)
            }
        };
        for k in -m..=m {
            for l in -m..=m {
                let (re, im) = coef(k - l);
                op.set(k, l, re, im);
            }
        }
        Ok(op)
    }

    /// Apply to a real function given by its series, returning the real part
    /// of the result as a series truncated to `m` modes.
    pub fn apply_series(&self, f: &TrigSeries) -> TrigSeries {
        let m = (self.n_modes / 2) as i64;
        let mut cre = vec![0.0; self.n_modes];
        let mut cim = vec![0.0; self.n_modes];
        for l in -m..=m {
            let (a, b) = f.coefficient(l.unsigned_abs());
            let (r, i) = if l == 0 {
                (a, 0.0)
            } else if l > 0 {
                (0.5 * a, -0.5 * b)
            } else {
                (0.5 * a, 0.5 * b)
            };
            cre[(l + m) as usize] = r;
            cim[(l + m) as usize] = i;
        }
        let mut out_re = vec![0.0; self.n_modes];
        let mut out_im = vec![0.0; self.n_modes];
        for k in 0..self.n_modes {
            let row_re = &self.re[k * self.n_modes..(k + 1) * self.n_modes];
            let row_im = &self.im[k * self.n_modes..(k + 1) * self.n_modes];
            out_re[k] = dot(row_re, &cre) - dot(row_im, &cim);
            out_im[k] = dot(row_re, &cim) + dot(row_im, &cre);
        }
        let mid = m as usize;
        let terms = (1..=mid)
            .map(|k| TrigTerm {
                freq: k as u64,
                cos: out_re[mid + k] + out_re[mid - k],
                sin: out_im[mid - k] - out_im[mid + k],
            })
            .collect();
        TrigSeries::new(self.side, out_re[mid], terms)
    }
}

/// Generator in drift form: `-(2 pi k / L)^2 / 2` on the diagonal plus the
/// drift `c (log rho)'` Toeplitz matrix times `i 2 pi l / L`, with
/// `c = 1 - alpha`. Requires the Fourier coefficients of `(log rho)'` beyond
/// `2m` to fall below `1e-12` relative to the largest one.
pub fn generator_matrix(model: &DensityModel, n_modes: usize, kind: GeneratorKind) -> Result<FourierOperator> {
    generator_matrix_with_tol(model, n_modes, kind, 1e-12)
}

pub fn generator_matrix_with_tol(
    model: &DensityModel,
    n_modes: usize,
    kind: GeneratorKind,
    tol: f64,
) -> Result<FourierOperator> {
    let m = check_modes(n_modes)?;
    require_1d(model)?;
    let side = model.domain().side();
    let n = fine_grid(n_modes);
    let h = side / n as f64;
    let drift: Vec<f64> = (0..n).map(|j| model.log_gradient(&[j as f64 * h]).map(|g| g[0])).collect::<Result<_>>()?;
    let (gre, gim) = dft(&drift, n / 2 - 1);
    let peak = gre.iter().zip(&gim).fold(0.0f64, |a, (r, i)| a.max(r.hypot(*i)));
    let tail = gre[2 * m + 1..].iter().zip(&gim[2 * m + 1..]).fold(0.0f64, |a, (r, i)| a.max(r.hypot(*i)));
    let rel = if peak > 0.0 { tail / peak } else { 0.0 };
    if rel > tol {
        return Err(Error::Resolution { tail: rel, tolerance: tol });
    }
    let c = 1.0 - kind.alpha();
    let coef = |n: i64| -> (f64, f64) {
        let i = n.unsigned_abs() as usize;
        if n >= 0 {
            (gre[i], gim[i])
        } else {
            (gre[i], -gim[i])
        }
    };
    let mut op = FourierOperator::zeros(n_modes, side, OperatorDescriptor::Generator(kind));
    let mi = m as i64;
    let a = 2.0 * PI / side;
    for k in -mi..=mi {
        for l in -mi..=mi {
            let (gr, gi) = coef(k - l);
            // c g_{k-l} * (i a l)
            let s = c * a * l as f64;
            let mut re = -gi * s;
            let im = gr * s;
            if k == l {
                re -= 0.5 * (a * l as f64).powi(2);
            }
            op.set(k, l, re, im);
        }
    }
    Ok(op)
}

fn require_1d(model: &DensityModel) -> Result<()> {
    if model.domain().dim() != 1 {
        return Err(Error::Unsupported("one-dimensional density required; use the tensor reference".into()));
    }
    Ok(())
}

/// A run of equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    /// Mean of the member eigenvalues.
    pub value: f64,
    /// Index of the first member.
    pub start: usize,
    pub multiplicity: usize,
}

impl Cluster {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.multiplicity
    }
}

/// Group ascending eigenvalues whose consecutive gaps are within
/// `rel_tol * max(1, |lambda|)`.
pub fn cluster_eigenvalues(values: &[f64], rel_tol: f64) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (v - values[i - 1]).abs() <= rel_tol * v.abs().max(1.0) => c.multiplicity += 1,
            _ => clusters.push(Cluster { value: v, start: i, multiplicity: 1 }),
        }
    }
    for c in &mut clusters {
        c.value = values[c.range()].iter().sum::<f64>() / c.multiplicity as f64;
    }
    clusters
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceSource {
    Generator { kind: GeneratorKind, n_modes: usize },
    Continuum { eps: f64, kind: NormalizationKind, n_grid: usize },
}

/// Reference eigenvalues (generator convention, ascending) and eigenfunctions.
#[derive(Debug, Clone)]
pub struct ReferenceEigendata {
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
    /// Eigenfunctions as trigonometric series on `[0, L)`.
    pub eigenfunctions: Vec<TrigSeries>,
    pub source: ReferenceSource,
    pub side: f64,
}

impl ReferenceEigendata {
    fn new(eigenvalues: Vec<f64>, eigenfunctions: Vec<TrigSeries>, source: ReferenceSource, side: f64) -> Self {
        let clusters = cluster_eigenvalues(&eigenvalues, CLUSTER_TOL);
        Self { eigenvalues, clusters, eigenfunctions, source, side }
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        self.eigenfunctions[j].eval(x)
    }

    /// Eigenfunction `j` on the grid `i L / n`.
    pub fn grid_values(&self, j: usize, n: usize) -> Vec<f64> {
        let h = self.side / n as f64;
        (0..n).map(|i| self.eval(j, i as f64 * h)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorOptions {
    pub n_modes: usize,
    /// Largest admissible omitted Fourier coefficient of `w`, relative to its mean.
    pub resolution_tol: f64,
    /// Shift `sigma` of the shift-invert solve `(A + sigma B)^{-1} B`.
    pub shift: f64,
    pub lanczos: LanczosOptions,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            n_modes: DEFAULT_N_MODES,
            resolution_tol: 1e-6,
            shift: 1.0,
            lanczos: LanczosOptions { block: 2, tol: 1e-12, max_basis: 400, seed: 0x5eed },
        }
    }
}

/// Fourier coefficients `(E(n), F(n))` for `n = 0..=2m` of `w = rho^{2 - 2 alpha}`
/// with `E = Re w_n`, `F = -Im w_n`, and the relative size of the largest
/// omitted coefficient.
fn weight_coefficients(model: &DensityModel, alpha: f64, two_m: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let power = 2.0 - 2.0 * alpha;
    let exact = matches!(
        model.kind(),
        DensityKind::Uniform | DensityKind::CosineLacunary { .. } | DensityKind::Tabulated { .. }
    );
    if power == 1.0 && exact || power == 0.0 {
        let series = if power == 0.0 {
            TrigSeries::new(model.domain().side(), 1.0, Vec::new())
        } else {
            model.fourier_series(usize::MAX >> 1)?.0
        };
        let mut e = vec![0.0; two_m + 1];
        let mut f = vec![0.0; two_m + 1];
        e[0] = series.a0;
        let mut omitted: f64 = 0.0;
        for t in &series.terms {
            let k = t.freq as usize;
            if k <= two_m {
                e[k] += 0.5 * t.cos;
                f[k] += 0.5 * t.sin;
            } else {
                omitted = omitted.max(0.5 * t.cos.hypot(t.sin));
            }
        }
        return Ok((e, f, omitted / series.a0.abs()));
    }
    let n = fine_grid(two_m + 1);
    let side = model.domain().side();
    let h = side / n as f64;
    let values: Vec<f64> = (0..n).map(|j| model.eval(&[j as f64 * h]).map(|r| r.powf(power))).collect::<Result<_>>()?;
    let top = (4 * two_m).min(n / 2 - 1).max(two_m);
    let (re, im) = dft(&values, top);
    let tail = re[two_m + 1..].iter().zip(&im[two_m + 1..]).fold(0.0f64, |a, (r, i)| a.max(r.hypot(*i)));
    let e = re[..=two_m].to_vec();
    let f = im[..=two_m].iter().map(|x| -x).collect();
    Ok((e, f, tail / re[0].abs()))
}

/// Eigendata of the limiting generator by Galerkin projection onto
/// `{1, cos(2 pi k x/L), sin(2 pi k x/L)}_{k <= m}`.
pub fn generator_eigendata(
    model: &DensityModel,
    k: usize,
    kind: GeneratorKind,
    opts: &GeneratorOptions,
) -> Result<ReferenceEigendata> {
    require_1d(model)?;
    let m = check_modes(opts.n_modes)?;
    let n = opts.n_modes;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(alloc::format!("requested {k} of {n} reference eigenpairs")));
    }
    let side = model.domain().side();
    let (e, f, tail) = weight_coefficients(model, kind.alpha(), 2 * m)?;
    if tail > opts.resolution_tol {
        return Err(Error::Resolution { tail, tolerance: opts.resolution_tol });
    }
    let ef = |n: i64| e[n.unsigned_abs() as usize];
    let ff = |n: i64| if n >= 0 { f[n as usize] } else { -f[(-n) as usize] };
    let cc = |k: i64, l: i64| 0.5 * (ef(k - l) + ef(k + l));
    let ss = |k: i64, l: i64| 0.5 * (ef(k - l) - ef(k + l));
    // integral of w cos_k sin_l
    let cs = |k: i64, l: i64| 0.5 * (ff(k + l) + ff(l - k));
    let basis = |p: usize| -> (i64, bool) {
        if p == 0 {
            (0, false)
        } else {
            (p.div_ceil(2) as i64, p.is_multiple_of(2))
        }
    };
    let a2 = (2.0 * PI / side).powi(2);
    let mut amat = vec![0.0; n * n];
    let mut bmat = vec![0.0; n * n];
    for p in 0..n {
        let (kp, sp) = basis(p);
        for q in 0..=p {
            let (kq, sq) = basis(q);
            let kl = 0.5 * a2 * (kp * kq) as f64;
            let (b, a) = match (sp, sq) {
                (false, false) => (cc(kp, kq), kl * ss(kp, kq)),
                (true, true) => (ss(kp, kq), kl * cc(kp, kq)),
                (false, true) => (cs(kp, kq), -kl * cs(kq, kp)),
                (true, false) => (cs(kq, kp), -kl * cs(kp, kq)),
            };
            amat[p * n + q] = a;
            amat[q * n + p] = a;
            bmat[p * n + q] = b;
            bmat[q * n + p] = b;
        }
    }
    let sigma = opts.shift;
    let cmat: Vec<f64> = amat.iter().zip(&bmat).map(|(a, b)| a + sigma * b).collect();
    drop(amat);
    let r = cholesky(&cmat, n)?;
    drop(cmat);
    let op = FnOperator {
        n,
        f: |y: &[f64], out: &mut [f64]| {
            let mut z = y.to_vec();
            solve_lower_transpose(&r, n, &mut z);
            for (i, o) in out.iter_mut().enumerate() {
                *o = dot(&bmat[i * n..(i + 1) * n], &z);
            }
            solve_lower(&r, n, out);
        },
    };
    let mut lopts = opts.lanczos.clone();
    lopts.block = lopts.block.max(2);
    let pairs = top_eigenpairs(&op, k, &lopts)?;
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    for (nu, y) in pairs.values.iter().zip(&pairs.vectors) {
        let lambda = 1.0 / nu - sigma;
        let mut x = y.clone();
        solve_lower_transpose(&r, n, &mut x);
        let terms = (1..=m).map(|j| TrigTerm { freq: j as u64, cos: x[2 * j - 1], sin: x[2 * j] }).collect();
        eigenvalues.push(if lambda.abs() < 1e-12 { 0.0 } else { lambda });
        eigenfunctions.push(TrigSeries::new(side, x[0], terms));
    }
    Ok(ReferenceEigendata::new(eigenvalues, eigenfunctions, ReferenceSource::Generator { kind, n_modes: n }, side))
}

/// Periodic Gaussian convolution on the grid `x_i = i L / n` with quadrature
/// weight `L / n`, built from its exact Fourier symbol:
/// `c_m = (1/n) sum_{|k| <= n/2} exp(-eps (2 pi k / L)^2 / 2) cos(2 pi k m / n)`.
fn circulant_column(n: usize, side: f64, eps: f64) -> Vec<f64> {
    let (ct, _) = unit_circle_table(n);
    let half = n / 2;
    let symbol: Vec<f64> = (0..=half)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / side;
            (-0.5 * eps * w * w).exp()
        })
        .collect();
    (0..n)
        .map(|mm| {
            let mut s = symbol[0];
            for (k, sk) in symbol.iter().enumerate().skip(1) {
                let c = ct[(k * mm) % n];
                // the Nyquist mode appears once
                s += if 2 * k == n { sk * c } else { 2.0 * sk * c };
            }
            s / n as f64
        })
        .collect()
}

/// The continuum kernel operator `(K f)_i = sum_j C_ij rho_j f_j` on a grid.
/// It is self-adjoint for the `rho`-weighted inner product, which is all the
/// Sinkhorn solvers need.
#[derive(Debug, Clone)]
pub struct ContinuumKernel {
    n: usize,
    side: f64,
    circulant: Vec<f64>,
    rho: Vec<f64>,
}

impl ContinuumKernel {
    pub fn new(model: &DensityModel, eps: f64, n_grid: usize) -> Result<Self> {
        require_1d(model)?;
        if n_grid < 8 {
            return Err(Error::InvalidParameter(alloc::format!("n_grid must be at least 8, got {n_grid}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("eps must be positive, got {eps}")));
        }
        let side = model.domain().side();
        let col = circulant_column(n_grid, side, eps);
        let mut circulant = vec![0.0; n_grid * n_grid];
        for i in 0..n_grid {
            for j in 0..n_grid {
                circulant[i * n_grid + j] = col[(i + n_grid - j) % n_grid];
            }
        }
        let h = side / n_grid as f64;
        let rho = (0..n_grid).map(|i| model.eval(&[i as f64 * h])).collect::<Result<_>>()?;
        Ok(Self { n: n_grid, side, circulant, rho })
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.side / self.n as f64;
        (0..self.n).map(|i| i as f64 * h).collect()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    fn apply_c(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&self.circulant[i * self.n..(i + 1) * self.n], x);
        }
    }
}

impl KernelOperator for ContinuumKernel {
    fn size(&self) -> usize {
        self.n
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let rx: Vec<f64> = x.iter().zip(&self.rho).map(|(a, b)| a * b).collect();
        self.apply_c(&rx, y);
    }
}

/// Collocation matrix of the normalized continuum operator
/// `P_ij = a_i C_ij rho_j b_j`.
#[derive(Debug, Clone)]
pub struct ContinuumOperator {
    pub kernel: ContinuumKernel,
    pub eps: f64,
    pub kind: NormalizationKind,
    /// Left weight (`U` for Sinkhorn, `V` for standard).
    pub left: Vec<f64>,
    /// Right weight (`U` for Sinkhorn, `U_alpha` for standard).
    pub right: Vec<f64>,
    pub report: Option<SinkhornReport>,
}

/// Tolerance used when running ASSA on continuum operators.
pub const CONTINUUM_ASSA_TOL: f64 = 1e-13;

pub fn continuum_operator(
    model: &DensityModel,
    eps: f64,
    n_grid: usize,
    kind: NormalizationKind,
) -> Result<ContinuumOperator> {
    let kernel = ContinuumKernel::new(model, eps, n_grid)?;
    let (left, right, report) = match kind {
        NormalizationKind::Sinkhorn => {
            let mut opts = AssaOptions::absolute(CONTINUUM_ASSA_TOL, eps);
            opts.max_iter = 500;
            let (w, rep) = assa(&kernel, eps, &opts)?;
            if !rep.converged {
                return Err(Error::NoConvergence(alloc::format!(
                    "ASSA on the continuum operator stopped after {} iterations (fixed-point residual {:.3e})",
                    rep.iterations,
                    rep.fixed_point_residual
                )));
            }
            (w.u.clone(), w.u, Some(rep))
        }
        NormalizationKind::Standard { alpha } => {
            let w = standard_weights(&kernel, alpha)?;
            (w.v, w.u, None)
        }
    };
    Ok(ContinuumOperator { kernel, eps, kind, left, right, report })
}

impl ContinuumOperator {
    pub fn n_grid(&self) -> usize {
        self.kernel.n
    }

    /// Dense row-major `P`.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.kernel.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.left[i] * self.kernel.circulant[i * n + j] * (self.kernel.rho[j] * self.right[j]);
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let bx: Vec<f64> = x.iter().zip(&self.right).map(|(a, b)| a * b).collect();
        let mut y = self.kernel.apply_vec(&bx);
        y.iter_mut().zip(&self.left).for_each(|(a, b)| *a *= b);
        y
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.apply(&vec![1.0; self.kernel.n])
    }

    /// Top-`k` eigenpairs `(mu, phi)` with `phi` on the grid, from the
    /// symmetric form `diag(w) C diag(w)`, `w = sqrt(a rho b)`, and
    /// `phi = y sqrt(a / (rho b))`.
    pub fn eigenpairs(&self, k: usize, lanczos: &LanczosOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.kernel.n;
        let w: Vec<f64> = (0..n).map(|i| (self.left[i] * self.kernel.rho[i] * self.right[i]).sqrt()).collect();
        let back: Vec<f64> = (0..n).map(|i| (self.left[i] / (self.kernel.rho[i] * self.right[i])).sqrt()).collect();
        let op = FnOperator {
            n,
            f: |x: &[f64], y: &mut [f64]| {
                let wx: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
                self.kernel.apply_c(&wx, y);
                y.iter_mut().zip(&w).for_each(|(a, b)| *a *= b);
            },
        };
        let pairs = top_eigenpairs(&op, k, lanczos)?;
        let vecs = pairs.vectors.iter().map(|y| y.iter().zip(&back).map(|(a, b)| a * b).collect()).collect();
        Ok((pairs.values, vecs))
    }
}

#[derive(Debug, Clone)]
pub struct ContinuumOptions {
    pub n_grid: usize,
    pub lanczos: LanczosOptions,
}

impl Default for ContinuumOptions {
    fn default() -> Self {
        Self { n_grid: DEFAULT_N_GRID, lanczos: LanczosOptions { block: 2, tol: 1e-11, max_basis: 2000, seed: 0x5eed } }
    }
}

/// `lambda = -ln(mu) / eps` eigendata of the continuum operator.
pub fn continuum_eigendata(
    model: &DensityModel,
    eps: f64,
    k: usize,
    kind: NormalizationKind,
    opts: &ContinuumOptions,
) -> Result<ReferenceEigendata> {
    let op = continuum_operator(model, eps, opts.n_grid, kind)?;
    let (mu, vecs) = op.eigenpairs(k, &opts.lanczos)?;
    let side = model.domain().side();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    for (m, v) in mu.iter().zip(&vecs) {
        if !(*m > 0.0) {
            return Err(Error::NumericalFailure(alloc::format!("continuum eigenvalue {m} is not positive")));
        }
        let lambda = -m.ln() / eps;
        eigenvalues.push(if lambda.abs() < 1e-12 { 0.0 } else { lambda });
        eigenfunctions.push(compact_series(TrigSeries::interpolate(side, v)));
    }
    Ok(ReferenceEigendata::new(
        eigenvalues,
        eigenfunctions,
        ReferenceSource::Continuum { eps, kind, n_grid: opts.n_grid },
        side,
    ))
}

/// Drop terms below `1e-15` of the largest coefficient.
fn compact_series(mut s: TrigSeries) -> TrigSeries {
    let peak = s.terms.iter().fold(s.a0.abs(), |a, t| a.max(t.cos.hypot(t.sin)));
    s.terms.retain(|t| t.cos.hypot(t.sin) > 1e-15 * peak);
    s
}

/// Which reference to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceRequest {
    Generator(GeneratorKind),
    Continuum { eps: f64, kind: NormalizationKind },
}

/// Reference eigendata for a one-dimensional density; `resolution` is the
/// number of Fourier modes (generator) or grid points (continuum).
pub fn reference_eigendata(
    model: &DensityModel,
    k: usize,
    request: ReferenceRequest,
    resolution: usize,
) -> Result<ReferenceEigendata> {
    match request {
        ReferenceRequest::Generator(kind) => {
            let opts = GeneratorOptions { n_modes: resolution, ..Default::default() };
            generator_eigendata(model, k, kind, &opts)
        }
        ReferenceRequest::Continuum { eps, kind } => {
            let opts = ContinuumOptions { n_grid: resolution, ..Default::default() };
            continuum_eigendata(model, eps, k, kind, &opts)
        }
    }
}

/// Eigendata of a separable density assembled from per-axis references:
/// eigenvalues add and eigenfunctions multiply.
#[derive(Debug, Clone)]
pub struct TensorReference {
    pub axes: Vec<ReferenceEigendata>,
    pub eigenvalues: Vec<f64>,
    pub clusters: Vec<Cluster>,
    /// Per-axis eigenfunction indices of each product eigenfunction.
    pub modes: Vec<Vec<usize>>,
}

impl TensorReference {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn eval(&self, j: usize, x: &[f64]) -> f64 {
        self.modes[j].iter().zip(&self.axes).zip(x).map(|((&mode, axis), &xi)| axis.eval(mode, xi)).product()
    }
}

/// Combine per-axis references into the `k` smallest product eigenvalues.
pub fn tensor_reference(axes: Vec<ReferenceEigendata>, k: usize) -> Result<TensorReference> {
    if axes.is_empty() {
        return Err(Error::InvalidParameter("at least one axis is required".into()));
    }
    let side = axes[0].side;
    if axes.iter().any(|a| a.side != side) {
        return Err(Error::Unsupported("axes with different side lengths".into()));
    }
    let mut combos: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    for axis in &axes {
        let avail = axis.eigenvalues.len().min(k.max(1));
        let mut next = Vec::with_capacity(combos.len() * avail);
        for (s, idx) in &combos {
            for j in 0..avail {
                let mut v = idx.clone();
                v.push(j);
                next.push((s + axis.eigenvalues[j], v));
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        // sums only grow along later axes, so the k smallest partial sums suffice
        next.truncate(k.max(1));
        combos = next;
    }
    if combos.len() < k {
        return Err(Error::InvalidParameter(alloc::format!(
            "only {} product eigenpairs are available, {k} requested",
            combos.len()
        )));
    }
    let eigenvalues: Vec<f64> = combos.iter().map(|c| c.0).collect();
    let modes = combos.into_iter().map(|c| c.1).collect();
    let clusters = cluster_eigenvalues(&eigenvalues, CLUSTER_TOL);
    Ok(TensorReference { axes, eigenvalues, clusters, modes })
}

/// Tensor reference for a separable `d`-dimensional model, solving each
/// distinct axis factor once.
pub fn separable_reference(
    model: &DensityModel,
    k: usize,
    request: ReferenceRequest,
    resolution: usize,
) -> Result<TensorReference> {
    if !model.is_separable() {
        return Err(Error::Unsupported("non-product density".into()));
    }
    let d = model.domain().dim();
    let mut factors: Vec<DensityModel> = Vec::with_capacity(d);
    let mut axes: Vec<ReferenceEigendata> = Vec::with_capacity(d);
    for a in 0..d {
        let factor = model.axis_model(a)?;
        let cached = factors.iter().position(|f| *f == factor);
        let data = match cached {
            Some(i) => axes[i].clone(),
            None => reference_eigendata(&factor, k, request, resolution)?,
        };
        factors.push(factor);
        axes.push(data);
    }
    tensor_reference(axes, k)
}
