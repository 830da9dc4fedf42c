//! The dense kernel matrix `K_ij = g(x_i - x_j) / M` and its action.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::density::Sample;
use crate::linalg::dot;
use crate::torus::{choose_truncation, gaussian_peak, image_sum_1d, TorusDomain, DEFAULT_TRUNCATION_TOL};
use crate::{Error, Result};

/// Which kernel is placed on the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    /// Periodized Gaussian on a torus, summing images with `|j|_inf <= images`.
    Periodic { domain: TorusDomain, images: usize },
    /// Plain Gaussian in `R^dim`.
    Euclidean { dim: usize },
}

impl KernelMode {
    /// Periodic mode with the image count chosen for the default truncation
    /// tolerance. Invalid `eps` falls back to no images; [`KernelMatrix::build`]
    /// rejects it anyway.
    pub fn periodic(domain: TorusDomain, eps: f64) -> Self {
        let images = choose_truncation(&domain, eps, DEFAULT_TRUNCATION_TOL).unwrap_or(0);
        KernelMode::Periodic { domain, images }
    }

    pub fn euclidean(dim: usize) -> Self {
        KernelMode::Euclidean { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelMode::Periodic { domain, .. } => domain.dim(),
            KernelMode::Euclidean { dim } => *dim,
        }
    }

    /// Kernel value `g(x - y)` with the normalizing peak `peak`.
    #[inline]
    fn eval_with_peak(&self, eps: f64, peak: f64, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelMode::Periodic { domain, images } => {
                let mut prod = peak;
                for (&a, &b) in x.iter().zip(y) {
                    prod *= image_sum_1d(eps, domain.side(), domain.distance_coord(a, b), *images);
                }
                prod
            }
            KernelMode::Euclidean { .. } => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                peak * (-r2 / (2.0 * eps)).exp()
            }
        }
    }

    /// `g(x - y)`.
    pub fn eval(&self, eps: f64, x: &[f64], y: &[f64]) -> f64 {
        self.eval_with_peak(eps, gaussian_peak(eps, self.dim()), x, y)
    }
}

/// A symmetric nonnegative operator that the normalization solvers can apply.
pub trait KernelOperator {
    fn size(&self) -> usize;
    /// `y = K x`; both slices have length [`size`](Self::size).
    fn apply_to(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        self.apply_to(x, &mut y);
        y
    }
}

/// Dense `M x M` kernel matrix with the `1/M` factor included.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    entries: Vec<f64>,
    m: usize,
    eps: f64,
    mode: KernelMode,
    sample: Sample,
}

impl KernelMatrix {
    /// Assemble `K_ij = g(x_i - x_j) / M`. Each unordered pair is evaluated
    /// once, so `K` is exactly symmetric.
    pub fn build(sample: &Sample, eps: f64, mode: KernelMode) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("eps must be positive, got {eps}")));
        }
        let m = sample.len();
        if m == 0 {
            return Err(Error::InvalidParameter("empty sample".into()));
        }
        let d = mode.dim();
        if sample.dim != d {
            return Err(Error::DimensionMismatch { expected: d, found: sample.dim });
        }
        if let (KernelMode::Periodic { domain, .. }, Some(sd)) = (&mode, &sample.domain) {
            if sd.side() != domain.side() {
                return Err(Error::InvalidParameter("sample and kernel live on different tori".into()));
            }
        }
        if matches!(mode, KernelMode::Periodic { .. }) && sample.domain.is_none() {
            return Err(Error::InvalidParameter("periodic kernel needs a torus sample".into()));
        }
        let peak = gaussian_peak(eps, d);
        let inv_m = 1.0 / m as f64;
        let mut entries = vec![0.0; m * m];

        let fill_row = |i: usize, row: &mut [f64]| {
            let xi = sample.point(i);
            for (j, r) in row.iter_mut().enumerate().skip(i) {
                *r = mode.eval_with_peak(eps, peak, xi, sample.point(j)) * inv_m;
            }
        };
        #[cfg(feature = "parallel")]
        entries.par_chunks_mut(m).enumerate().for_each(|(i, row)| fill_row(i, row));
        #[cfg(not(feature = "parallel"))]
        entries.chunks_mut(m).enumerate().for_each(|(i, row)| fill_row(i, row));

        for i in 0..m {
            for j in 0..i {
                entries[i * m + j] = entries[j * m + i];
            }
        }
        Ok(Self { entries, m, eps, mode, sample: sample.clone() })
    }

    /// Wrap precomputed entries (e.g. from a cache), checking shape and
    /// exact symmetry.
    pub fn from_parts(sample: Sample, eps: f64, mode: KernelMode, entries: Vec<f64>) -> Result<Self> {
        let m = sample.len();
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: entries.len() });
        }
        if mode.dim() != sample.dim {
            return Err(Error::DimensionMismatch { expected: mode.dim(), found: sample.dim });
        }
        for i in 0..m {
            for j in 0..i {
                if entries[i * m + j] != entries[j * m + i] {
                    return Err(Error::InvalidInput(alloc::format!("kernel entries ({i}, {j}) are not symmetric")));
                }
            }
        }
        if entries.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidInput("kernel entries must be finite and nonnegative".into()));
        }
        Ok(Self { entries, m, eps, mode, sample })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mode(&self) -> &KernelMode {
        &self.mode
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    /// `c K`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.entries.iter_mut().for_each(|e| *e *= c);
        out
    }

    /// `K x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: x.len() });
        }
        Ok(self.apply_vec(x))
    }

    /// Kernel density estimate `K 1` at the sample points.
    pub fn row_sums(&self) -> Vec<f64> {
        self.apply_vec(&vec![1.0; self.m])
    }

    /// `r_i = g(x - x_i) / M` for an arbitrary point `x`. At `x = x_j` this is
    /// exactly row `j`.
    pub fn out_of_sample_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.mode.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite query point".into()));
        }
        let x = match &self.mode {
            KernelMode::Periodic { domain, .. } => domain.wrap(x)?,
            KernelMode::Euclidean { .. } => x.to_vec(),
        };
        let peak = gaussian_peak(self.eps, d);
        let inv_m = 1.0 / self.m as f64;
        Ok((0..self.m).map(|i| self.mode.eval_with_peak(self.eps, peak, self.sample.point(i), &x) * inv_m).collect())
    }
}

impl KernelOperator for KernelMatrix {
    fn size(&self) -> usize {
        self.m
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m;
        #[cfg(feature = "parallel")]
        y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = dot(&self.entries[i * m..(i + 1) * m], x));
        #[cfg(not(feature = "parallel"))]
        y.iter_mut().enumerate().for_each(|(i, yi)| *yi = dot(&self.entries[i * m..(i + 1) * m], x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DensityModel;
    use crate::torus::periodized_gaussian;

    fn circle_sample(points: Vec<f64>) -> Sample {
        Sample::from_points(Some(TorusDomain::unit(1)), 1, points, 0).unwrap()
    }

    #[test]
    fn single_point() {
        let s = circle_sample(vec![0.3]);
        let k = KernelMatrix::build(&s, 0.01, KernelMode::periodic(TorusDomain::unit(1), 0.01)).unwrap();
        // (2 pi 0.01)^{-1/2}; images contribute e^{-50} relative
        assert!((k.get(0, 0) - 3.989422804014327).abs() < 1e-14);
    }

    #[test]
    fn antipodal_pair() {
        let dom = TorusDomain::unit(1);
        let s = circle_sample(vec![0.0, 0.5]);
        let mode = KernelMode::periodic(dom, 0.1);
        let k = KernelMatrix::build(&s, 0.1, mode).unwrap();
        let KernelMode::Periodic { images, .. } = mode else { unreachable!() };
        let g = periodized_gaussian(&dom, 0.1, &[0.5], images).unwrap();
        assert_eq!(k.get(0, 1), 0.5 * g);
        assert_eq!(k.get(1, 0), k.get(0, 1));
        // image sum over j in [-20, 20] at 30 digits: 0.72292238980852732970
        assert!((g - 0.7229223898085273).abs() < 1e-14);
    }

    #[test]
    fn symmetric_and_diagonal() {
        let model = DensityModel::lacunary_benchmark();
        let s = model.sample(60, 5).unwrap();
        let eps = 0.02;
        let k = KernelMatrix::build(&s, eps, KernelMode::periodic(*model.domain(), eps)).unwrap();
        for i in 0..60 {
            for j in 0..60 {
                assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
        let d0 = k.get(0, 0);
        assert!((0..60).all(|i| k.get(i, i) == d0));
    }

    #[test]
    fn out_of_sample_reproduces_rows() {
        let model = DensityModel::separable_benchmark();
        let s = model.sample(40, 2).unwrap();
        let eps = 0.05;
        let k = KernelMatrix::build(&s, eps, KernelMode::periodic(*model.domain(), eps)).unwrap();
        for j in [0, 17, 39] {
            assert_eq!(k.out_of_sample_row(s.point(j)).unwrap(), k.row(j));
        }
    }

    #[test]
    fn apply_zero_and_ones() {
        let s = circle_sample(vec![0.1, 0.2, 0.7]);
        let k = KernelMatrix::build(&s, 0.05, KernelMode::periodic(TorusDomain::unit(1), 0.05)).unwrap();
        assert_eq!(k.apply(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        let rs = k.row_sums();
        for i in 0..3 {
            assert!((rs[i] - k.row(i).iter().sum::<f64>()).abs() < 1e-15);
        }
        assert!(k.apply(&[1.0; 2]).is_err());
    }

    #[test]
    fn rejects_bad_eps() {
        let s = circle_sample(vec![0.1]);
        assert!(KernelMatrix::build(&s, 0.0, KernelMode::periodic(TorusDomain::unit(1), 0.1)).is_err());
        assert!(KernelMatrix::build(&s, -1.0, KernelMode::periodic(TorusDomain::unit(1), 0.1)).is_err());
    }

    #[test]
    fn euclidean_mode() {
        let s = Sample::standard_normal(3, 10, 1).unwrap();
        let k = KernelMatrix::build(&s, 0.5, KernelMode::euclidean(3)).unwrap();
        // (2 pi 0.5)^{-3/2} / M
        let peak = core::f64::consts::PI.powf(-1.5) / 10.0;
        assert!((k.get(3, 3) - peak).abs() < 1e-15);
    }
}
