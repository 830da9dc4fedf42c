//! Sampling densities on the torus and reproducible samplers.
//!
//! Every model is normalized so that it integrates to one over the domain.
//! Product-form models are sampled axis by axis by inverting the exact
//! (Fourier-series) CDF with bisection; any model can also be sampled by
//! rejection against the uniform envelope.
//!
//! Random streams come from ChaCha20 seeded with `seed_from_u64(seed)`; the
//! `stream` argument selects an independent ChaCha stream for the same seed so
//! that parallel trials never share randomness.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::torus::TorusDomain;
use crate::{Error, Result};

/// Lacunary series terms are dropped once `b^{-p j}` falls below this.
pub const LACUNARY_TERM_TOL: f64 = 1e-14;
/// Bisection tolerance when inverting a CDF.
pub const CDF_TOL: f64 = 1e-12;
/// Points per axis for the positivity validation grid.
pub const VALIDATION_GRID: usize = 4096;

const CDF_TABLE: usize = 1024;

/// Real trigonometric series on `[0, L)`:
/// `a0 + sum_k a_k cos(2 pi f_k x / L) + b_k sin(2 pi f_k x / L)`.
///
/// Terms are stored sparsely since lacunary series reach frequencies far
/// beyond anything a dense coefficient array could hold.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    pub side: f64,
    pub a0: f64,
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub freq: u64,
    pub cos: f64,
    pub sin: f64,
}

impl TrigSeries {
    pub fn new(side: f64, a0: f64, terms: Vec<TrigTerm>) -> Self {
        Self { side, a0, terms }
    }

    #[inline]
    fn omega(&self, freq: u64) -> f64 {
        2.0 * PI * freq as f64 / self.side
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.a0;
        for t in &self.terms {
            let (sn, cs) = (self.omega(t.freq) * x).sin_cos();
            s += t.cos * cs + t.sin * sn;
        }
        s
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for t in &self.terms {
            let w = self.omega(t.freq);
            let (sn, cs) = (w * x).sin_cos();
            s += w * (t.sin * cs - t.cos * sn);
        }
        s
    }

    /// `int_0^x` of the series.
    pub fn antideriv(&self, x: f64) -> f64 {
        let mut s = self.a0 * x;
        for t in &self.terms {
            let w = self.omega(t.freq);
            let (sn, cs) = (w * x).sin_cos();
            s += (t.cos * sn + t.sin * (1.0 - cs)) / w;
        }
        s
    }

    /// `|a0| + sum_k sqrt(a_k^2 + b_k^2)`, an upper bound on `|f|`.
    pub fn abs_bound(&self) -> f64 {
        self.a0.abs() + self.terms.iter().map(|t| t.cos.hypot(t.sin)).sum::<f64>()
    }

    /// Coefficient pair of frequency `freq` (zero when absent).
    pub fn coefficient(&self, freq: u64) -> (f64, f64) {
        if freq == 0 {
            return (self.a0, 0.0);
        }
        self.terms.iter().filter(|t| t.freq == freq).fold((0.0, 0.0), |(a, b), t| (a + t.cos, b + t.sin))
    }

    /// Series from samples on the uniform grid `x_j = j L / n` by discrete
    /// Fourier transform (the trigonometric interpolant). For even `n` the
    /// Nyquist cosine is halved so that the interpolant is real and exact at
    /// the nodes.
    pub fn interpolate(side: f64, values: &[f64]) -> Self {
        let n = values.len();
        let nf = n as f64;
        let a0 = values.iter().sum::<f64>() / nf;
        let (cos_t, sin_t) = unit_circle_table(n);
        let mut terms = Vec::with_capacity(n / 2);
        for k in 1..=n / 2 {
            let mut a = 0.0;
            let mut b = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let idx = (k * j) % n;
                a += v * cos_t[idx];
                b += v * sin_t[idx];
            }
            let (mut a, mut b) = (2.0 * a / nf, 2.0 * b / nf);
            if 2 * k == n {
                a *= 0.5;
                b = 0.0;
            }
            terms.push(TrigTerm { freq: k as u64, cos: a, sin: b });
        }
        Self { side, a0, terms }
    }
}

/// `cos(2 pi m / n)` and `sin(2 pi m / n)` for `m = 0..n`.
pub(crate) fn unit_circle_table(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut c = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for m in 0..n {
        let (sn, cs) = (2.0 * PI * m as f64 / n as f64).sin_cos();
        c.push(cs);
        s.push(sn);
    }
    (c, s)
}

/// Which family a [`DensityModel`] belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// Constant density `L^{-d}`.
    Uniform,
    /// `(1 + (1 - b^{-p})/2 sum_{j>=1} b^{-p j} cos(2 pi b^j x / L)) / L` on a
    /// one-dimensional torus.
    CosineLacunary { exponent: f64, base: u64, series: TrigSeries },
    /// `prod_i exp(f_i(x_i)) / Z_i` with each `f_i` a trigonometric polynomial.
    SeparableExp { exponents: Vec<TrigSeries>, axis_norms: Vec<f64> },
    /// Trigonometric interpolant of grid values on a one-dimensional torus.
    Tabulated { values: Vec<f64>, series: TrigSeries },
}

/// A strictly positive probability density on a torus.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    domain: TorusDomain,
    kind: DensityKind,
    normalization: f64,
}

impl DensityModel {
    pub fn uniform(domain: TorusDomain) -> Self {
        Self { domain, kind: DensityKind::Uniform, normalization: domain.volume() }
    }

    /// Lacunary cosine series with decay exponent `p > 1` and integer base
    /// `b >= 2`; terms stop at the first `j` with `b^{-p j} < 1e-14`.
    pub fn cosine_lacunary(side: f64, exponent: f64, base: u64) -> Result<Self> {
        Self::cosine_lacunary_with_tol(side, exponent, base, LACUNARY_TERM_TOL)
    }

    pub fn cosine_lacunary_with_tol(side: f64, exponent: f64, base: u64, term_tol: f64) -> Result<Self> {
        let domain = TorusDomain::new(1, side)?;
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("lacunary exponent must exceed 1, got {exponent}")));
        }
        if base < 2 {
            return Err(Error::InvalidParameter(alloc::format!("lacunary base must be >= 2, got {base}")));
        }
        if !(term_tol > 0.0) {
            return Err(Error::InvalidParameter("term tolerance must be positive".into()));
        }
        let b = base as f64;
        let amp = 0.5 * (1.0 - b.powf(-exponent));
        let mut terms = Vec::new();
        let mut freq: u64 = 1;
        for j in 1.. {
            let weight = b.powf(-exponent * j as f64);
            if weight < term_tol {
                break;
            }
            freq = freq.checked_mul(base).ok_or_else(|| {
                Error::InvalidParameter("lacunary frequency overflow; raise the term tolerance".into())
            })?;
            terms.push(TrigTerm { freq, cos: amp * weight / side, sin: 0.0 });
        }
        let series = TrigSeries::new(side, 1.0 / side, terms);
        let model = Self { domain, kind: DensityKind::CosineLacunary { exponent, base, series }, normalization: side };
        model.validate()?;
        Ok(model)
    }

    /// The one-dimensional density `1 + (1 - 3^{-2.2})/2 sum 3^{-2.2 j} cos(3^j 2 pi x)`
    /// on the unit circle.
    pub fn lacunary_benchmark() -> Self {
        Self::cosine_lacunary(1.0, 2.2, 3).expect("valid parameters")
    }

    /// Product density `prod_i exp(f_i(x_i)) / Z_i`.
    pub fn separable_exp(domain: TorusDomain, exponents: Vec<TrigSeries>) -> Result<Self> {
        if exponents.len() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), found: exponents.len() });
        }
        let mut exponents = exponents;
        for f in &mut exponents {
            f.side = domain.side();
        }
        let axis_norms: Vec<f64> = exponents.iter().map(|f| exp_axis_integral(f, 1024)).collect();
        let normalization = axis_norms.iter().product();
        let model = Self { domain, kind: DensityKind::SeparableExp { exponents, axis_norms }, normalization };
        model.validate()?;
        Ok(model)
    }

    /// `rho(x, y, z) ∝ exp(cos 4 pi x + f(y) + f(z))` with
    /// `f(t) = 0.4 cos 2 pi t + 0.12 sin 4 pi t` on the unit 3-torus.
    pub fn separable_benchmark() -> Self {
        let x = TrigSeries::new(1.0, 0.0, vec![TrigTerm { freq: 2, cos: 1.0, sin: 0.0 }]);
        let f = TrigSeries::new(
            1.0,
            0.0,
            vec![TrigTerm { freq: 1, cos: 0.4, sin: 0.0 }, TrigTerm { freq: 2, cos: 0.0, sin: 0.12 }],
        );
        Self::separable_exp(TorusDomain::unit(3), vec![x, f.clone(), f]).expect("valid parameters")
    }

    /// Density from positive values on the grid `x_j = j L / n`, interpolated
    /// trigonometrically and rescaled to unit mass.
    pub fn tabulated(side: f64, values: Vec<f64>) -> Result<Self> {
        let domain = TorusDomain::new(1, side)?;
        if values.len() < 4 {
            return Err(Error::InvalidParameter("tabulated density needs at least 4 values".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::ModelInvalid("tabulated values must be positive and finite".into()));
        }
        let series = TrigSeries::interpolate(side, &values);
        let normalization = series.a0 * side;
        let model = Self { domain, kind: DensityKind::Tabulated { values, series }, normalization };
        model.validate()?;
        Ok(model)
    }

    pub fn domain(&self) -> &TorusDomain {
        &self.domain
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    /// Normalization constant `Z` of the unnormalized density.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn is_separable(&self) -> bool {
        true
    }

    fn validate(&self) -> Result<()> {
        let n = VALIDATION_GRID;
        let h = self.domain.side() / n as f64;
        for axis in 0..self.domain.dim() {
            let factor = self.axis_model(axis)?;
            for i in 0..n {
                let v = factor.eval_1d(i as f64 * h);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::ModelInvalid(alloc::format!(
                        "density is {v} at x = {} on axis {axis}",
                        i as f64 * h
                    )));
                }
            }
        }
        Ok(())
    }

    /// One-dimensional factor along `axis` (the model itself in 1-D).
    pub fn axis_model(&self, axis: usize) -> Result<DensityModel> {
        if axis >= self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), found: axis + 1 });
        }
        let dom1 = TorusDomain::new(1, self.domain.side())?;
        Ok(match &self.kind {
            DensityKind::Uniform => DensityModel::uniform(dom1),
            DensityKind::SeparableExp { exponents, axis_norms } => DensityModel {
                domain: dom1,
                kind: DensityKind::SeparableExp {
                    exponents: vec![exponents[axis].clone()],
                    axis_norms: vec![axis_norms[axis]],
                },
                normalization: axis_norms[axis],
            },
            _ => self.clone(),
        })
    }

    /// Evaluate a one-dimensional model (or the first axis factor).
    fn eval_1d(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0 / self.domain.side(),
            DensityKind::CosineLacunary { series, .. } => series.eval(x),
            DensityKind::Tabulated { series, .. } => series.eval(x) / self.normalization,
            DensityKind::SeparableExp { exponents, axis_norms } => exponents[0].eval(x).exp() / axis_norms[0],
        }
    }

    /// `rho(x)` for a point in `[0, L)^d`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), found: x.len() });
        }
        let v = match &self.kind {
            DensityKind::Uniform => 1.0 / self.normalization,
            DensityKind::CosineLacunary { series, .. } => series.eval(x[0]),
            DensityKind::Tabulated { series, .. } => series.eval(x[0]) / self.normalization,
            DensityKind::SeparableExp { exponents, .. } => {
                let s: f64 = exponents.iter().zip(x).map(|(f, &xi)| f.eval(xi)).sum();
                s.exp() / self.normalization
            }
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::ModelInvalid(alloc::format!("density evaluates to {v} at {x:?}")))
        }
    }

    /// `grad log rho(x)`.
    pub fn log_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.domain.dim() {
            return Err(Error::DimensionMismatch { expected: self.domain.dim(), found: x.len() });
        }
        Ok(match &self.kind {
            DensityKind::Uniform => vec![0.0; x.len()],
            DensityKind::CosineLacunary { series, .. } | DensityKind::Tabulated { series, .. } => {
                vec![series.deriv(x[0]) / series.eval(x[0])]
            }
            DensityKind::SeparableExp { exponents, .. } => {
                exponents.iter().zip(x).map(|(f, &xi)| f.deriv(xi)).collect()
            }
        })
    }

    /// Trapezoidal quadrature of the unnormalized density with `quad_points`
    /// nodes per axis. Spectrally accurate for the smooth kinds and exact for
    /// trigonometric polynomials of degree below `quad_points`.
    pub fn normalization_constant(&self, quad_points: usize) -> Result<f64> {
        if quad_points < 64 {
            return Err(Error::InvalidParameter(alloc::format!(
                "at least 64 quadrature points per axis are required, got {quad_points}"
            )));
        }
        let side = self.domain.side();
        let h = side / quad_points as f64;
        let trap = |f: &dyn Fn(f64) -> f64| (0..quad_points).map(|i| f(i as f64 * h)).sum::<f64>() * h;
        Ok(match &self.kind {
            DensityKind::Uniform => self.domain.volume(),
            DensityKind::CosineLacunary { series, .. } => trap(&|x| series.eval(x)) * side,
            DensityKind::Tabulated { series, .. } => trap(&|x| series.eval(x)),
            DensityKind::SeparableExp { exponents, .. } => {
                exponents.iter().map(|f| trap(&|x| f.eval(x).exp())).product()
            }
        })
    }

    /// Exact Fourier series of a one-dimensional model truncated at
    /// `max_freq`, together with the largest omitted coefficient magnitude
    /// (relative to the mean). Smooth kinds without a closed form are
    /// transformed on a grid of `8 * max_freq` points (at least 256).
    pub fn fourier_series(&self, max_freq: usize) -> Result<(TrigSeries, f64)> {
        if self.domain.dim() != 1 {
            return Err(Error::Unsupported("Fourier series of a multi-dimensional density".into()));
        }
        let side = self.domain.side();
        match &self.kind {
            DensityKind::Uniform => Ok((TrigSeries::new(side, 1.0 / side, Vec::new()), 0.0)),
            DensityKind::CosineLacunary { series, .. } | DensityKind::Tabulated { series, .. } => {
                let scale = match &self.kind {
                    DensityKind::Tabulated { .. } => 1.0 / self.normalization,
                    _ => 1.0,
                };
                let mut kept = Vec::new();
                let mut omitted: f64 = 0.0;
                for t in &series.terms {
                    let t = TrigTerm { freq: t.freq, cos: t.cos * scale, sin: t.sin * scale };
                    if t.freq as usize <= max_freq {
                        kept.push(t);
                    } else {
                        omitted = omitted.max(t.cos.hypot(t.sin));
                    }
                }
                let a0 = series.a0 * scale;
                Ok((TrigSeries::new(side, a0, kept), omitted / a0))
            }
            DensityKind::SeparableExp { .. } => {
                let n = (8 * max_freq).max(256);
                let h = side / n as f64;
                let values: Vec<f64> = (0..n).map(|i| self.eval_1d(i as f64 * h)).collect();
                Ok(truncate_series(TrigSeries::interpolate(side, &values), max_freq))
            }
        }
    }

    /// Largest value of the density, bounded analytically where possible.
    pub fn upper_bound(&self) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0 / self.normalization,
            DensityKind::CosineLacunary { series, .. } => series.abs_bound(),
            DensityKind::Tabulated { series, .. } => series.abs_bound() / self.normalization,
            DensityKind::SeparableExp { exponents, .. } => {
                exponents.iter().map(|f| f.abs_bound()).sum::<f64>().exp() / self.normalization
            }
        }
    }

    /// CDF of the one-dimensional factor along `axis`.
    pub fn axis_cdf(&self, axis: usize) -> Result<AxisCdf> {
        let factor = self.axis_model(axis)?;
        let side = self.domain.side();
        let series = match &factor.kind {
            DensityKind::Uniform => TrigSeries::new(side, 1.0 / side, Vec::new()),
            DensityKind::CosineLacunary { series, .. } => series.clone(),
            DensityKind::Tabulated { series, .. } => {
                let z = factor.normalization;
                TrigSeries::new(
                    side,
                    series.a0 / z,
                    series.terms.iter().map(|t| TrigTerm { freq: t.freq, cos: t.cos / z, sin: t.sin / z }).collect(),
                )
            }
            DensityKind::SeparableExp { .. } => {
                let (s, tail) = factor.fourier_series(64)?;
                if tail > 1e-15 {
                    return Err(Error::Resolution { tail, tolerance: 1e-15 });
                }
                s
            }
        };
        Ok(AxisCdf::new(series))
    }

    /// `M` i.i.d. draws; product densities use per-axis CDF inversion.
    pub fn sample(&self, m: usize, seed: u64) -> Result<Sample> {
        self.sample_stream(m, seed, 0)
    }

    /// Draws from ChaCha stream `stream` of `seed`.
    pub fn sample_stream(&self, m: usize, seed: u64, stream: u64) -> Result<Sample> {
        if m == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let d = self.domain.dim();
        let mut rng = rng_for(seed, stream);
        let cdfs: Vec<AxisCdf> = (0..d).map(|a| self.axis_cdf(a)).collect::<Result<_>>()?;
        let mut points = Vec::with_capacity(m * d);
        for _ in 0..m {
            for cdf in &cdfs {
                let u: f64 = rng.random();
                points.push(self.domain.wrap_coord(cdf.inverse(u)));
            }
        }
        Ok(Sample { domain: Some(self.domain), dim: d, points, seed })
    }

    /// `M` draws by rejection against the uniform envelope `sup rho`.
    pub fn sample_rejection(&self, m: usize, seed: u64) -> Result<Sample> {
        if m == 0 {
            return Err(Error::InvalidParameter("sample size must be at least 1".into()));
        }
        let bound = self.upper_bound();
        let acceptance = 1.0 / (bound * self.domain.volume());
        if acceptance < 1e-3 {
            return Err(Error::Efficiency { acceptance });
        }
        let d = self.domain.dim();
        let side = self.domain.side();
        let mut rng = rng_for(seed, 0);
        let mut points = Vec::with_capacity(m * d);
        let mut x = vec![0.0; d];
        let mut accepted = 0usize;
        let mut proposed = 0usize;
        while accepted < m {
            for xi in x.iter_mut() {
                *xi = side * rng.random::<f64>();
            }
            proposed += 1;
            let u: f64 = rng.random();
            if u * bound <= self.eval(&x)? {
                points.extend_from_slice(&x);
                accepted += 1;
            }
            if proposed >= 10_000 && (accepted as f64) < 1e-3 * proposed as f64 {
                return Err(Error::Efficiency { acceptance: accepted as f64 / proposed as f64 });
            }
        }
        Ok(Sample { domain: Some(self.domain), dim: d, points, seed })
    }
}

fn truncate_series(full: TrigSeries, max_freq: usize) -> (TrigSeries, f64) {
    let a0 = full.a0;
    let mut kept = Vec::new();
    let mut omitted: f64 = 0.0;
    for t in full.terms {
        if t.freq as usize <= max_freq {
            kept.push(t);
        } else {
            omitted = omitted.max(t.cos.hypot(t.sin));
        }
    }
    (TrigSeries::new(full.side, a0, kept), omitted / a0.abs())
}

/// Trapezoidal `int_0^L exp(f)`.
fn exp_axis_integral(f: &TrigSeries, n: usize) -> f64 {
    let h = f.side / n as f64;
    (0..n).map(|i| f.eval(i as f64 * h).exp()).sum::<f64>() * h
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// CDF of a one-dimensional density given by its Fourier series, with a
/// coarse table used to bracket the bisection.
#[derive(Debug, Clone)]
pub struct AxisCdf {
    series: TrigSeries,
    table: Vec<f64>,
}

impl AxisCdf {
    pub fn new(series: TrigSeries) -> Self {
        let h = series.side / CDF_TABLE as f64;
        let table = (0..=CDF_TABLE).map(|i| series.antideriv(i as f64 * h)).collect();
        Self { series, table }
    }

    pub fn side(&self) -> f64 {
        self.series.side
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.series.antideriv(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.series.eval(x)
    }

    /// `(F(x), F'(x))` in one pass. Consecutive frequencies are generated by
    /// angle addition, which is accurate to a few ulps for the short series
    /// used here.
    fn value_and_slope(&self, x: f64) -> (f64, f64) {
        let s = &self.series;
        let w = 2.0 * PI / s.side;
        let (s1, c1) = (w * x).sin_cos();
        let (mut ck, mut sk, mut prev) = (1.0, 0.0, 0u64);
        let mut f = s.a0 * x;
        let mut df = s.a0;
        for t in &s.terms {
            if t.freq == prev + 1 {
                (ck, sk) = (ck * c1 - sk * s1, sk * c1 + ck * s1);
            } else {
                (sk, ck) = (w * t.freq as f64 * x).sin_cos();
            }
            prev = t.freq;
            let wk = w * t.freq as f64;
            f += (t.cos * sk - t.sin * (ck - 1.0)) / wk;
            df += t.cos * ck + t.sin * sk;
        }
        (f, df)
    }

    /// Solve `F(x) = u` to `CDF_TOL` in `x` by Newton steps safeguarded with
    /// bisection inside the bracketing table cell.
    pub fn inverse(&self, u: f64) -> f64 {
        let side = self.series.side;
        let h = side / CDF_TABLE as f64;
        let cell = self.table.partition_point(|&f| f <= u).clamp(1, CDF_TABLE);
        let mut lo = (cell - 1) as f64 * h;
        let mut hi = cell as f64 * h;
        let (flo, fhi) = (self.table[cell - 1], self.table[cell]);
        let mut x = if fhi > flo { lo + (u - flo) / (fhi - flo) * h } else { 0.5 * (lo + hi) };
        x = x.clamp(lo, hi);
        for _ in 0..100 {
            let (f, df) = self.value_and_slope(x);
            if f <= u {
                lo = x;
            } else {
                hi = x;
            }
            let newton = x - (f - u) / df;
            let next = if df > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let step = (next - x).abs();
            x = next;
            if step <= CDF_TOL || hi - lo <= CDF_TOL {
                break;
            }
        }
        x
    }
}

/// Points of a sample, stored row-major (`M` rows of `d` coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// The torus the points live on; `None` for samples in `R^d`.
    pub domain: Option<TorusDomain>,
    pub dim: usize,
    pub points: Vec<f64>,
    pub seed: u64,
}

impl Sample {
    pub fn from_points(domain: Option<TorusDomain>, dim: usize, points: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: points.len() % dim });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate in sample".into()));
        }
        if let Some(dom) = domain {
            if dom.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dom.dim(), found: dim });
            }
            if points.iter().any(|&p| !(0.0..dom.side()).contains(&p)) {
                return Err(Error::InvalidInput("sample coordinate outside [0, L)".into()));
            }
        }
        Ok(Self { domain, dim, points, seed })
    }

    /// Standard normal draws in `R^d`.
    pub fn standard_normal(dim: usize, m: usize, seed: u64) -> Result<Self> {
        if m == 0 || dim == 0 {
            return Err(Error::InvalidParameter("sample size and dimension must be positive".into()));
        }
        let mut rng = rng_for(seed, 0);
        let points = (0..m * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Ok(Self { domain: None, dim, points, seed })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

/// `M eps^{d/2}`: the expected number of points within one bandwidth.
pub fn effective_sample_size(m: usize, eps: f64, dim: usize) -> f64 {
    m as f64 * eps.powf(0.5 * dim as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_one_on_unit_circle() {
        let m = DensityModel::uniform(TorusDomain::unit(1));
        for x in [0.0, 0.3, 0.99] {
            assert_eq!(m.eval(&[x]).unwrap(), 1.0);
        }
        assert_eq!(m.log_gradient(&[0.4]).unwrap(), vec![0.0]);
        assert_eq!(m.normalization_constant(64).unwrap(), 1.0);
    }

    #[test]
    fn lacunary_at_origin() {
        let m = DensityModel::lacunary_benchmark();
        let b = 3f64;
        let amp = 0.5 * (1.0 - b.powf(-2.2));
        let mut s = 0.0;
        for j in 1..=40 {
            let w = b.powf(-2.2 * j as f64);
            if w < 1e-14 {
                break;
            }
            s += w;
        }
        let expected = 1.0 + amp * s;
        assert!((m.eval(&[0.0]).unwrap() - expected).abs() < 1e-15);
        // closed form of the full geometric series: 1 + 3^{-2.2}/2
        assert!((expected - (1.0 + 0.5 * b.powf(-2.2))).abs() < 1e-14);
        assert_eq!(m.log_gradient(&[0.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn lacunary_term_count() {
        if let DensityKind::CosineLacunary { series, .. } = DensityModel::lacunary_benchmark().kind() {
            // 3^{-2.2 j} < 1e-14 first holds at j = 14
            assert_eq!(series.terms.len(), 13);
            assert_eq!(series.terms.last().unwrap().freq, 3u64.pow(13));
        } else {
            unreachable!()
        }
    }

    #[test]
    fn lacunary_integrates_to_one() {
        let m = DensityModel::lacunary_benchmark();
        // cosines integrate to zero on any grid finer than... the trapezoid
        // rule on n points integrates cos(2 pi f x) exactly unless n | f.
        let z = m.normalization_constant(1024).unwrap();
        assert!((z - 1.0).abs() < 1e-10, "{z}");
    }

    #[test]
    fn separable_benchmark_at_origin() {
        let m = DensityModel::separable_benchmark();
        let v = m.eval(&[0.0, 0.0, 0.0]).unwrap();
        let z = m.normalization();
        assert!((v - (1.0f64 + 0.8).exp() / z).abs() < 1e-15 * v);
        let g = m.log_gradient(&[0.1, 0.2, 0.3]).unwrap();
        let fx = -4.0 * PI * (4.0 * PI * 0.1).sin();
        let fp = |t: f64| -0.8 * PI * (2.0 * PI * t).sin() + 0.48 * PI * (4.0 * PI * t).cos();
        assert!((g[0] - fx).abs() < 1e-12);
        assert!((g[1] - fp(0.2)).abs() < 1e-12);
        assert!((g[2] - fp(0.3)).abs() < 1e-12);
    }

    #[test]
    fn exp_factor_self_convergence() {
        let f = TrigSeries::new(
            1.0,
            0.0,
            vec![TrigTerm { freq: 1, cos: 0.4, sin: 0.0 }, TrigTerm { freq: 2, cos: 0.0, sin: 0.12 }],
        );
        let a = exp_axis_integral(&f, 256);
        let b = exp_axis_integral(&f, 512);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn tabulated_interpolates_nodes() {
        let n = 64;
        let values: Vec<f64> = (0..n).map(|i| 2.0 + (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let m = DensityModel::tabulated(1.0, values.clone()).unwrap();
        assert!((m.normalization() - 2.0).abs() < 1e-14);
        for (i, v) in values.iter().enumerate() {
            let x = i as f64 / n as f64;
            assert!((m.eval(&[x]).unwrap() - v / 2.0).abs() < 1e-13);
        }
        let x = 0.123;
        let g = m.log_gradient(&[x]).unwrap()[0];
        let exact = -2.0 * PI * (2.0 * PI * x).sin() / (2.0 + (2.0 * PI * x).cos());
        assert!((g - exact).abs() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_nonpositive() {
        assert!(matches!(DensityModel::tabulated(1.0, vec![1.0, 0.0, 1.0, 1.0]), Err(Error::ModelInvalid(_))));
    }

    #[test]
    fn sample_is_deterministic() {
        let m = DensityModel::lacunary_benchmark();
        let a = m.sample(500, 11).unwrap();
        let b = m.sample(500, 11).unwrap();
        assert_eq!(a.points, b.points);
        let c = m.sample_stream(500, 11, 1).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn uniform_sample_mean() {
        let dom = TorusDomain::new(2, 2.0).unwrap();
        let m = DensityModel::uniform(dom);
        let n = 20_000;
        let s = m.sample(n, 3).unwrap();
        for axis in 0..2 {
            let mean = (0..n).map(|i| s.point(i)[axis]).sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 5.0 * 2.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn rejection_efficiency_error() {
        let values: Vec<f64> = (0..64).map(|i| if i == 0 { 1e5 } else { 1e-3 }).collect();
        // a spike holding nearly all the mass makes the envelope useless
        let m = DensityModel::tabulated(1.0, values);
        match m {
            Ok(model) => assert!(matches!(model.sample_rejection(10, 1), Err(Error::Efficiency { .. }))),
            Err(Error::ModelInvalid(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn effective_sample_size_formula() {
        assert!((effective_sample_size(4000, 0.05, 3) - 4000.0 * 0.05f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_sample_size_rejected() {
        let m = DensityModel::uniform(TorusDomain::unit(1));
        assert!(m.sample(0, 1).is_err());
    }
}
