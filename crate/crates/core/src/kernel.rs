//! Half-integer Matérn correlation functions and separable products.
//!
//! For smoothness `ν = p + 1/2` with integer `p ≥ 0`, the Matérn correlation
//! reduces to a degree-`p` polynomial times a decaying exponential,
//!
//! ```text
//! K(x, x') = P(c·r) · exp(−c·r),   r = |x − x'|,   c = √(2ν) / ω,
//! ```
//!
//! which is what everything in this crate evaluates — no Bessel functions.
//! Encoding the smoothness through the integer `p` makes non-half-integer
//! values unrepresentable; those correlations admit no compactly supported
//! kernel packets, so the rest of the machinery would not apply to them.

use crate::{Error, Result};

/// A one-dimensional Matérn correlation with smoothness `ν = p + 1/2`.
///
/// Carries the derived constants used throughout: the decay rate
/// `c = √(2ν)/ω` and the kernel-packet degree `k = 2ν + 2 = 2p + 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfIntegerMatern {
    p: u32,
    omega: f64,
    c: f64,
    k: usize,
    /// Coefficients of the polynomial factor in powers of `c·r`;
    /// `poly[0] = 1` so that the correlation is 1 at distance zero.
    poly: Vec<f64>,
}

impl HalfIntegerMatern {
    /// Builds the correlation for `ν = p + 1/2` with scale `ω = omega`.
    pub fn new(p: u32, omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale omega must be positive and finite, got {omega}"
            )));
        }
        let two_nu = 2.0 * (p as f64) + 1.0;
        let c = two_nu.sqrt() / omega;
        let k = 2 * (p as usize) + 3;

        // P(t) = Σ_j (p!/(2p)!) · (p+j)!/(j!(p−j)!) · (2t)^{p−j}; collected in
        // powers t^m via m = p−j, with the coefficient recurrence
        // c_{j−1} = c_j · 2j / ((p+j)(p−j+1)) started from c_p = 1.
        let pf = p as f64;
        let mut poly = vec![0.0; p as usize + 1];
        let mut cj = 1.0;
        poly[0] = cj; // m = 0 ⇔ j = p
        for j in (1..=p as u64).rev() {
            let jf = j as f64;
            cj *= 2.0 * jf / ((pf + jf) * (pf - jf + 1.0));
            poly[(p as u64 - (j - 1)) as usize] = cj;
        }
        Ok(Self { p, omega, c, k, poly })
    }

    /// Smoothness index `p` (so `ν = p + 1/2`).
    pub fn p(&self) -> u32 {
        self.p
    }

    /// Scale parameter `ω`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Decay rate `c = √(2ν)/ω`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Kernel-packet degree `k = 2p + 3` (odd, ≥ 3).
    pub fn k(&self) -> usize {
        self.k
    }

    /// Same smoothness, different scale.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.p, omega)
    }

    /// Polynomial factor coefficients in powers of `c·r` (internal use).
    pub(crate) fn poly(&self) -> &[f64] {
        &self.poly
    }

    /// Polynomial factor `P(t)` evaluated by Horner's rule.
    #[inline]
    pub(crate) fn poly_at(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &a in self.poly.iter().rev() {
            acc = acc * t + a;
        }
        acc
    }

    /// Correlation between two scalar inputs; always in `(0, 1]`.
    #[inline]
    pub fn correlation(&self, x: f64, y: f64) -> f64 {
        let t = self.c * (x - y).abs();
        self.poly_at(t) * (-t).exp()
    }
}

/// A separable (product) correlation over `d ≥ 1` input dimensions.
#[derive(Debug, Clone)]
pub struct ProductKernel {
    factors: Vec<HalfIntegerMatern>,
}

impl ProductKernel {
    pub fn new(factors: Vec<HalfIntegerMatern>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter(
                "product kernel needs at least one factor".into(),
            ));
        }
        Ok(Self { factors })
    }

    /// One factor for every dimension, all with the same `p` and `ω`.
    pub fn isotropic(p: u32, omega: f64, d: usize) -> Result<Self> {
        let f = HalfIntegerMatern::new(p, omega)?;
        Self::new(vec![f; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, j: usize) -> &HalfIntegerMatern {
        &self.factors[j]
    }

    pub fn factors(&self) -> &[HalfIntegerMatern] {
        &self.factors
    }

    /// Product of per-dimension correlations.
    pub fn correlation(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), got: x.len() });
        }
        if y.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), got: y.len() });
        }
        Ok(self
            .factors
            .iter()
            .zip(x.iter().zip(y))
            .map(|(k, (&a, &b))| k.correlation(a, b))
            .product())
    }
}
