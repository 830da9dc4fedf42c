//! Periodic domain arithmetic and the Gaussian kernels used throughout.
//!
//! The periodized kernel is evaluated axis by axis: the Gaussian factorizes
//! over coordinates and the image lattice is a product, so
//! `sum_{|j|_inf <= J} g(r + L j) = (2 pi eps)^{-d/2} prod_i sum_{|j| <= J} exp(-(r_i + L j)^2 / 2 eps)`
//! holds term by term. This costs `d (2J + 1)` exponentials instead of
//! `(2J + 1)^d`.

use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Default truncation tolerance relative to the kernel peak.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-15;
/// Series for the periodization constants stop once a term drops below this.
pub const DEFAULT_SERIES_TOL: f64 = 1e-18;

/// The flat torus `(R / L Z)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusDomain {
    dim: usize,
    side: f64,
}

impl TorusDomain {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("side length must be positive and finite, got {side}")));
        }
        Ok(Self { dim, side })
    }

    /// The unit torus `(R / Z)^d`.
    pub fn unit(dim: usize) -> Self {
        Self::new(dim, 1.0).expect("dim >= 1")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Lebesgue measure of the domain, `L^d`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Reduce one coordinate into `[0, L)`.
    #[inline]
    pub fn wrap_coord(&self, x: f64) -> f64 {
        let r = rem_euclid(x, self.side);
        // tiny negatives round up to exactly L.
        if r >= self.side {
            0.0
        } else {
            r
        }
    }

    /// Reduce every coordinate into `[0, L)`.
    pub fn wrap(&self, raw: &[f64]) -> Result<alloc::vec::Vec<f64>> {
        self.check_len(raw.len())?;
        raw.iter()
            .map(|&x| {
                if x.is_finite() {
                    Ok(self.wrap_coord(x))
                } else {
                    Err(Error::InvalidInput(alloc::format!("non-finite coordinate {x}")))
                }
            })
            .collect()
    }

    /// Shortest periodic representative of `y - x` for one coordinate, in
    /// `(-L/2, L/2]`. The tie at `|y - x| = L/2` resolves to `+L/2`.
    #[inline]
    pub fn displacement_coord(&self, x: f64, y: f64) -> f64 {
        let r = rem_euclid(y - x, self.side);
        let r = if r >= self.side { 0.0 } else { r };
        if r > 0.5 * self.side {
            r - self.side
        } else {
            r
        }
    }

    /// Periodic distance `|y - x|` for one coordinate, in `[0, L/2]`.
    /// Computed from `|y - x|`, so it is exactly symmetric in its arguments.
    #[inline]
    pub fn distance_coord(&self, x: f64, y: f64) -> f64 {
        let r = rem_euclid((y - x).abs(), self.side);
        if r > 0.5 * self.side {
            self.side - r
        } else {
            r
        }
    }

    pub fn displacement(&self, x: &[f64], y: &[f64]) -> Result<PeriodicDisplacement> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        Ok(PeriodicDisplacement { components: x.iter().zip(y).map(|(&a, &b)| self.displacement_coord(a, b)).collect() })
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim {
            Err(Error::DimensionMismatch { expected: self.dim, found: n })
        } else {
            Ok(())
        }
    }
}

/// Canonical representative of a difference on the torus; each component
/// lies in `[-L/2, L/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicDisplacement {
    pub components: alloc::vec::Vec<f64>,
}

impl PeriodicDisplacement {
    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum()
    }

    pub fn negated(&self) -> Self {
        Self { components: self.components.iter().map(|c| -c).collect() }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("eps must be positive, got {eps}")))
    }
}

/// Normalizing factor `(2 pi eps)^{-d/2}`.
#[inline]
pub fn gaussian_peak(eps: f64, dim: usize) -> f64 {
    (2.0 * PI * eps).powf(-0.5 * dim as f64)
}

/// Standard Gaussian kernel `(2 pi eps)^{-d/2} exp(-|r|^2 / 2 eps)`.
pub fn gaussian(eps: f64, r: &[f64]) -> Result<f64> {
    check_eps(eps)?;
    let r2: f64 = r.iter().map(|c| c * c).sum();
    Ok(gaussian_peak(eps, r.len()) * (-r2 / (2.0 * eps)).exp())
}

/// Unnormalized one-axis image sum `sum_{|j| <= J} exp(-(r + L j)^2 / 2 eps)`.
///
/// Evaluated at `|r|` with the images paired symmetrically, so the result is
/// exactly even in `r`.
#[inline]
pub fn image_sum_1d(eps: f64, side: f64, r: f64, images: usize) -> f64 {
    let r = r.abs();
    let inv = 0.5 / eps;
    let mut s = (-r * r * inv).exp();
    for j in 1..=images {
        let shift = side * j as f64;
        let a = r + shift;
        let b = r - shift;
        s += (-a * a * inv).exp() + (-b * b * inv).exp();
    }
    s
}

/// Periodized Gaussian `sum_{|j|_inf <= J} g_eps(r + L j)`.
pub fn periodized_gaussian(domain: &TorusDomain, eps: f64, r: &[f64], images: usize) -> Result<f64> {
    check_eps(eps)?;
    if r.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), found: r.len() });
    }
    Ok(periodized_gaussian_unchecked(domain.side(), eps, r, images))
}

#[inline]
pub(crate) fn periodized_gaussian_unchecked(side: f64, eps: f64, r: &[f64], images: usize) -> f64 {
    let mut prod = gaussian_peak(eps, r.len());
    for &c in r {
        prod *= image_sum_1d(eps, side, c, images);
    }
    prod
}

/// Per-axis bound on the omitted images beyond radius `J`, relative to the
/// peak: `2 exp(-(J + 1/2)^2 L^2 / 2 eps) / (1 - exp(-(J + 1) L^2 / eps))`.
///
/// Holds for `|r| <= L/2` since every omitted image is at distance at least
/// `(j - 1/2) L`, and consecutive terms shrink by at least
/// `exp(-(J + 1) L^2 / eps)`.
pub fn axis_tail_bound(side: f64, eps: f64, images: usize) -> f64 {
    let l2 = side * side;
    let jh = images as f64 + 0.5;
    let ratio = (-(images as f64 + 1.0) * l2 / eps).exp();
    2.0 * (-jh * jh * l2 / (2.0 * eps)).exp() / (1.0 - ratio)
}

/// Smallest truncation radius `J` whose omitted image mass is provably below
/// `tol * (2 pi eps)^{-d/2}` for every displacement in `[-L/2, L/2]^d`.
///
/// In `d` dimensions the omitted part of the product is bounded by
/// `d * tail(J) * (1 + tail(0))^{d-1}`. A tolerance at or above the peak
/// requests no images at all.
pub fn choose_truncation(domain: &TorusDomain, eps: f64, tol: f64) -> Result<usize> {
    check_eps(eps)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("tolerance must be positive, got {tol}")));
    }
    if tol >= 1.0 {
        return Ok(0);
    }
    let d = domain.dim() as f64;
    let full = 1.0 + axis_tail_bound(domain.side(), eps, 0);
    let growth = full.powf(d - 1.0);
    let mut images = 0usize;
    while d * axis_tail_bound(domain.side(), eps, images) * growth > tol {
        images += 1;
        if images > 10_000 {
            return Err(Error::InvalidParameter(alloc::format!(
                "eps = {eps} is too large relative to L = {} for a finite truncation",
                domain.side()
            )));
        }
    }
    Ok(images)
}

/// The increasing functions `gamma_{eps,L}` and `gamma'_{eps,L}` that control
/// how far the periodized kernel departs from the free Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodizationConstants {
    pub eps: f64,
    /// `sum_{j in Z} exp(-j^2 L^2 / 2 eps)`, always `>= 1`.
    pub gamma: f64,
    /// `sum_{j >= 1} (2j + 1) L eps^{-1/2} exp(-(2j - 1)^2 L^2 / 8 eps)`.
    pub gamma_prime: f64,
}

impl PeriodizationConstants {
    /// Lipschitz amplification `e^{-1} + d gamma' gamma^{d-1}`.
    pub fn lipschitz_factor(&self, dim: usize) -> f64 {
        (-1.0f64).exp() + dim as f64 * self.gamma_prime * self.gamma.powi(dim as i32 - 1)
    }
}

pub fn periodization_constants(domain: &TorusDomain, eps: f64, series_tol: f64) -> Result<PeriodizationConstants> {
    check_eps(eps)?;
    let l = domain.side();
    let l2 = l * l;

    let mut gamma = 1.0;
    let mut j = 1u64;
    loop {
        let jf = j as f64;
        let term = (-jf * jf * l2 / (2.0 * eps)).exp();
        if term < series_tol {
            break;
        }
        gamma += 2.0 * term;
        j += 1;
    }

    let mut gamma_prime = 0.0;
    let scale = l / eps.sqrt();
    let mut j = 1u64;
    loop {
        let jf = j as f64;
        let odd = 2.0 * jf - 1.0;
        let term = (2.0 * jf + 1.0) * scale * (-odd * odd * l2 / (8.0 * eps)).exp();
        if term < series_tol {
            break;
        }
        gamma_prime += term;
        j += 1;
    }

    Ok(PeriodizationConstants { eps, gamma, gamma_prime })
}

// f64::rem_euclid without std.
fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = x % m;
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn wrap_examples() {
        let unit = TorusDomain::unit(1);
        assert_eq!(unit.wrap(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(unit.wrap(&[1.25]).unwrap(), vec![0.25]);
        let two = TorusDomain::new(1, 2.0).unwrap();
        assert_eq!(two.wrap(&[-0.5]).unwrap(), vec![1.5]);
        assert_eq!(unit.wrap(&[-1e-18]).unwrap(), vec![0.0]);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        let unit = TorusDomain::unit(2);
        assert!(matches!(unit.wrap(&[0.1, f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(unit.wrap(&[f64::INFINITY, 0.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn domain_validation() {
        assert!(TorusDomain::new(0, 1.0).is_err());
        assert!(TorusDomain::new(1, 0.0).is_err());
        assert!(TorusDomain::new(1, -1.0).is_err());
        assert!(TorusDomain::new(1, f64::NAN).is_err());
    }

    #[test]
    fn displacement_examples() {
        let unit = TorusDomain::unit(1);
        let d = unit.displacement(&[0.1], &[0.9]).unwrap();
        assert!((d.components[0] + 0.2).abs() < 1e-15);
        assert_eq!(unit.displacement(&[0.3], &[0.3]).unwrap().components[0], 0.0);
        let four = TorusDomain::new(1, 4.0).unwrap();
        assert_eq!(four.displacement(&[0.0], &[3.0]).unwrap().components[0], -1.0);
    }

    #[test]
    fn displacement_tie_is_positive_half() {
        let unit = TorusDomain::unit(1);
        assert_eq!(unit.displacement_coord(0.0, 0.5), 0.5);
        assert_eq!(unit.displacement_coord(0.5, 0.0), 0.5);
        assert_eq!(unit.displacement_coord(0.25, 0.75), 0.5);
    }

    #[test]
    fn gaussian_at_zero() {
        let g = gaussian(1.0, &[0.0]).unwrap();
        assert!((g - 0.398_942_280_401_432_7).abs() < 1e-15);
        let g = gaussian(0.5, &[0.0, 0.0]).unwrap();
        assert!((g - 1.0 / PI).abs() < 1e-15);
        assert!(gaussian(0.0, &[0.0]).is_err());
        assert!(gaussian(-1.0, &[0.0]).is_err());
    }

    #[test]
    fn gaussian_matches_extended_precision() {
        // (2 pi 0.01)^{-1/2} exp(-2) at 40 digits (mpmath):
        // 0.5399096651318805195056420041071358173981
        let g = gaussian(0.01, &[0.2]).unwrap();
        let expected = 0.539_909_665_131_880_5;
        assert!((g - expected).abs() < 2e-16 * expected * 4.0, "{g}");
    }

    #[test]
    fn zero_images_is_free_gaussian() {
        let dom = TorusDomain::unit(3);
        let r = [0.1, -0.2, 0.45];
        let a = periodized_gaussian(&dom, 0.02, &r, 0).unwrap();
        let b = gaussian(0.02, &r).unwrap();
        assert!((a - b).abs() <= 1e-14 * b);
    }

    #[test]
    fn images_negligible_at_small_eps() {
        let dom = TorusDomain::unit(1);
        let peak = gaussian_peak(0.01, 1);
        let j = periodized_gaussian(&dom, 0.01, &[0.0], 20).unwrap();
        assert_eq!(j, peak);
        assert!((peak - 3.989_422_804_014_327).abs() < 1e-14);
    }

    #[test]
    fn truncation_three_vs_ten_at_half() {
        let dom = TorusDomain::unit(1);
        let a = periodized_gaussian(&dom, 0.5, &[0.0], 3).unwrap();
        let b = periodized_gaussian(&dom, 0.5, &[0.0], 10).unwrap();
        // J = 3 omits 2 (e^{-16} + e^{-25} + ...) / sqrt(pi) = 1.2698e-7
        let omitted = 2.0 * ((-16.0f64).exp() + (-25.0f64).exp()) / core::f64::consts::PI.sqrt();
        assert!(((b - a) - omitted).abs() < 1e-15);
        let c = periodized_gaussian(&dom, 0.5, &[0.0], 6).unwrap();
        assert!((c - b).abs() < 1e-15);
        // sum_j exp(-j^2) / sqrt(pi) = 1.000103446372407638926... (mpmath)
        assert!((b - 1.000_103_446_372_407_6).abs() < 1e-14);
    }

    #[test]
    fn choose_truncation_examples() {
        let dom = TorusDomain::unit(1);
        assert!(choose_truncation(&dom, 0.001, 1e-15).unwrap() <= 1);
        assert!(choose_truncation(&dom, 0.5, 1e-15).unwrap() >= 4);
        assert_eq!(choose_truncation(&dom, 0.5, 1.0).unwrap(), 0);
        assert_eq!(choose_truncation(&dom, 0.5, 3.0).unwrap(), 0);
        assert!(choose_truncation(&dom, 0.5, 0.0).is_err());
    }

    #[test]
    fn periodization_constant_examples() {
        let dom = TorusDomain::unit(1);
        let c = periodization_constants(&dom, 0.5, DEFAULT_SERIES_TOL).unwrap();
        assert!((c.gamma - 1.772_637_204_826_652).abs() < 1e-14);
        let tiny = periodization_constants(&dom, 1e-4, DEFAULT_SERIES_TOL).unwrap();
        assert_eq!(tiny.gamma, 1.0);
        assert_eq!(tiny.gamma_prime, 0.0);
    }

    #[test]
    fn periodization_constants_monotone() {
        let dom = TorusDomain::new(1, 1.3).unwrap();
        let mut prev = periodization_constants(&dom, 1e-3, DEFAULT_SERIES_TOL).unwrap();
        for i in 1..40 {
            let eps = 1e-3 * 1.2f64.powi(i);
            let c = periodization_constants(&dom, eps, DEFAULT_SERIES_TOL).unwrap();
            assert!(c.gamma >= prev.gamma && c.gamma >= 1.0);
            assert!(c.gamma_prime >= prev.gamma_prime);
            prev = c;
        }
    }
}
