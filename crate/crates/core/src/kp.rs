//! Kernel-packet construction: compactly supported combinations of Matérn
//! translates, and their assembly into the banded pair `(A, Φ)`.
//!
//! A central packet on knots `a₁ < … < a_k` is a nonzero solution of the
//! homogeneous system
//!
//! ```text
//! Σ_j A_j a_j^l exp(δ c a_j) = 0,   l = 0..(k−3)/2,  δ = ±1,
//! ```
//!
//! which pins the function `Σ_j A_j K(·, a_j)` to vanish outside
//! `[a₁, a_k]`. One-sided variants (vanishing on a half line only) use the
//! same rows for one sign of `δ` plus auxiliary rows for the other sign;
//! they absorb the boundary of the data range. Stacking one packet per data
//! point gives a basis in which the correlation matrix factors as
//! `K·A = Φ` with `A` and `Φ` banded.
//!
//! The coefficient systems are tiny (at most `(k−1) × k`) but exponentially
//! graded, so each one is shift-standardized, row-equilibrated, and solved
//! through an SVD null vector rather than elimination.

use nalgebra::DMatrix;

use crate::banded::BandedMatrix;
use crate::kernel::HalfIntegerMatern;
use crate::{check_strictly_increasing, Error, Result};

/// Which boundary role a packet plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpKind {
    /// Supported on `[a₁, a_k]`; uses exactly `k` knots.
    Central,
    /// Supported on `(−∞, a_s]`; used at the left edge of the data.
    LeftSided,
    /// Supported on `[a₁, ∞)`; used at the right edge of the data.
    RightSided,
}

/// Coefficients of one kernel packet on its supporting knots.
///
/// Normalization: `‖coeffs‖∞ = 1` and the first coefficient of magnitude
/// above `1e-12` is positive. The overall scale of a packet is a free
/// choice; every downstream quantity is invariant to it.
#[derive(Debug, Clone)]
pub struct KpCoefficients {
    pub knots: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub kind: KpKind,
}

/// Separation beyond which exp(±c·a) leaves the representable range even
/// after shift standardization.
const MAX_SCALED_SEPARATION: f64 = 700.0;

/// Second-smallest singular value below this fraction of the largest means
/// the null space is numerically more than one-dimensional.
const NULLSPACE_GAP_TOL: f64 = 1e-10;

fn check_knots(kern: &HalfIntegerMatern, a: &[f64]) -> Result<()> {
    check_strictly_increasing(a, "packet knots")?;
    let sep = kern.c() * (a[a.len() - 1] - a[0]);
    if sep > MAX_SCALED_SEPARATION {
        return Err(Error::Conditioning(format!(
            "scaled knot separation c·(a_s − a_1) = {sep:.3e} exceeds the exp range"
        )));
    }
    Ok(())
}

/// Builds the equilibrated homogeneous system for a packet of the given
/// kind on `s` knots (shift-standardized internally). Rows are scaled by
/// their largest magnitude entry, which leaves the null space unchanged.
fn packet_system(kern: &HalfIntegerMatern, a: &[f64], kind: KpKind) -> DMatrix<f64> {
    let s = a.len();
    let c = kern.c();
    let k = kern.k();
    let main_rows = (k - 3) / 2 + 1;
    // shift standardization: central centers the window, one-sided pins the
    // boundary knot at zero
    let t = match kind {
        KpKind::Central => -(a[0] + a[s - 1]) / 2.0,
        KpKind::RightSided => -a[0],
        KpKind::LeftSided => -a[s - 1],
    };
    let b: Vec<f64> = a.iter().map(|&x| x + t).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut push_block = |sign: f64, count: usize| {
        for l in 0..count {
            let row: Vec<f64> =
                b.iter().map(|&bj| bj.powi(l as i32) * (sign * c * bj).exp()).collect();
            rows.push(row);
        }
    };
    match kind {
        KpKind::Central => {
            push_block(1.0, main_rows);
            push_block(-1.0, main_rows);
        }
        KpKind::RightSided => {
            push_block(-1.0, main_rows);
            if 2 * s >= k + 3 {
                push_block(1.0, s - (k + 3) / 2 + 1);
            }
        }
        KpKind::LeftSided => {
            push_block(1.0, main_rows);
            if 2 * s >= k + 3 {
                push_block(-1.0, s - (k + 3) / 2 + 1);
            }
        }
    }
    let mut m = DMatrix::zeros(rows.len(), s);
    for (i, row) in rows.iter().enumerate() {
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let inv = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v * inv;
        }
    }
    m
}

/// Singular values (descending) of the equilibrated packet system.
///
/// Exposed as a diagnostic: the theory says the null space is exactly
/// one-dimensional for distinct knots, so the second-smallest value stays
/// well separated from zero, and a system on fewer than `k` knots
/// (`Central` with `m < k`) has no null space at all.
pub fn system_singular_values(
    kern: &HalfIntegerMatern,
    knots: &[f64],
    kind: KpKind,
) -> Result<Vec<f64>> {
    if knots.len() < 2 {
        return Err(Error::InvalidParameter("need at least two knots".into()));
    }
    check_knots(kern, knots)?;
    let m = packet_system(kern, knots, kind);
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Null vector of the (rows × s) system, padded square so the full right
/// singular basis is available. Returns the normalized coefficients.
fn solve_null_vector(m: &DMatrix<f64>, s: usize) -> Result<Vec<f64>> {
    let rows = m.nrows();
    debug_assert!(rows < s);
    let mut padded = DMatrix::zeros(s, s);
    padded.view_mut((0, 0), (rows, s)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = order[0];
    let second = svd.singular_values[order[1]];
    let largest = svd.singular_values[order[s - 1]];
    if !(second > NULLSPACE_GAP_TOL * largest) {
        return Err(Error::Conditioning(format!(
            "packet system null space is not numerically one-dimensional \
             (second singular value {second:.3e} vs largest {largest:.3e})"
        )));
    }
    let mut v: Vec<f64> = (0..s).map(|j| v_t[(smallest, j)]).collect();
    normalize(&mut v);
    Ok(v)
}

/// ℓ∞ = 1 with the first non-negligible coefficient positive.
fn normalize(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if max > 0.0 {
        for x in v.iter_mut() {
            *x /= max;
        }
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Coefficients of the central packet on exactly `k` strictly increasing
/// knots.
pub fn central_kp_coefficients(
    kern: &HalfIntegerMatern,
    a: &[f64],
) -> Result<KpCoefficients> {
    let k = kern.k();
    if a.len() != k {
        return Err(Error::InvalidParameter(format!(
            "central packet needs exactly k = {k} knots, got {}",
            a.len()
        )));
    }
    check_knots(kern, a)?;
    let m = packet_system(kern, a, KpKind::Central);
    let coeffs = solve_null_vector(&m, k)?;
    Ok(KpCoefficients { knots: a.to_vec(), coeffs, kind: KpKind::Central })
}

fn one_sided(kern: &HalfIntegerMatern, a: &[f64], kind: KpKind) -> Result<KpCoefficients> {
    let k = kern.k();
    let s = a.len();
    if 2 * s < k + 1 || s > k - 1 {
        return Err(Error::InvalidParameter(format!(
            "one-sided packet needs (k+1)/2 ≤ s ≤ k−1 knots (k = {k}), got {s}"
        )));
    }
    check_knots(kern, a)?;
    let m = packet_system(kern, a, kind);
    let coeffs = solve_null_vector(&m, s)?;
    Ok(KpCoefficients { knots: a.to_vec(), coeffs, kind })
}

/// Right-sided packet: vanishes on `(−∞, a₁)`, supported on `[a₁, ∞)`.
pub fn right_kp_coefficients(kern: &HalfIntegerMatern, a: &[f64]) -> Result<KpCoefficients> {
    one_sided(kern, a, KpKind::RightSided)
}

/// Left-sided packet: vanishes on `(a_s, ∞)`, supported on `(−∞, a_s]`.
pub fn left_kp_coefficients(kern: &HalfIntegerMatern, a: &[f64]) -> Result<KpCoefficients> {
    one_sided(kern, a, KpKind::LeftSided)
}

impl KpCoefficients {
    /// Value of the packet `Σ_j A_j K(x, a_j)` at an arbitrary point.
    pub fn eval(&self, kern: &HalfIntegerMatern, x: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.knots)
            .map(|(&aj, &kj)| aj * kern.correlation(x, kj))
            .sum()
    }
}

/// Non-zero window of the basis vector `φ(x*)`: at most `k − 1` entries
/// starting at basis index `window_start`.
#[derive(Debug, Clone)]
pub struct BasisRow {
    pub window_start: usize,
    pub values: Vec<f64>,
}

/// The kernel-packet basis on `n ≥ k` sorted knots: the banded coefficient
/// matrix `A` (bandwidth `(k−1)/2`), the banded value matrix `Φ` with
/// `Φ[l][j] = φ_j(x_l)` (bandwidth `(k−3)/2`), and the knots themselves.
///
/// Column `j` of `A` holds the packet coefficients of `φ_j` in the rows of
/// its supporting knots; `K · A = Φ` entrywise, with `K` the dense
/// correlation matrix.
#[derive(Debug, Clone)]
pub struct KpBasis {
    kernel: HalfIntegerMatern,
    knots: Vec<f64>,
    a: BandedMatrix,
    phi: BandedMatrix,
    equally_spaced: bool,
}

/// Relative gap deviation below which knots count as equally spaced and the
/// central coefficients are solved once and reused.
const EQUAL_SPACING_RTOL: f64 = 1e-12;

/// Assembles the packet basis: `(k−1)/2` left-sided packets on knot
/// prefixes, `n−k+1` central packets on consecutive windows, `(k−1)/2`
/// right-sided packets on knot suffixes.
pub fn build_basis(kern: &HalfIntegerMatern, knots: &[f64]) -> Result<KpBasis> {
    let k = kern.k();
    let n = knots.len();
    if n < k {
        return Err(Error::InsufficientData { needed: k, got: n });
    }
    check_strictly_increasing(knots, "knots")?;
    let h = (k - 1) / 2;

    let equally_spaced = {
        let gap0 = knots[1] - knots[0];
        knots.windows(2).all(|w| ((w[1] - w[0]) - gap0).abs() <= EQUAL_SPACING_RTOL * gap0)
    };

    let mut a = BandedMatrix::zeros(n, h, h);
    let mut set_column = |j: usize, start: usize, coeffs: &[f64]| {
        for (off, &v) in coeffs.iter().enumerate() {
            a.set(start + off, j, v);
        }
    };

    // left boundary: prefixes of lengths (k+1)/2 .. k−1
    for j in 0..h {
        let s = (k + 1) / 2 + j;
        let c = left_kp_coefficients(kern, &knots[..s])?;
        set_column(j, 0, &c.coeffs);
    }
    // interior: consecutive k-windows; equal spacing shares one solve
    let shared = if equally_spaced {
        Some(central_kp_coefficients(kern, &knots[..k])?)
    } else {
        None
    };
    for i in 0..(n - k + 1) {
        let coeffs = match &shared {
            Some(c) => c.coeffs.clone(),
            None => central_kp_coefficients(kern, &knots[i..i + k])?.coeffs,
        };
        set_column(h + i, i, &coeffs);
    }
    // right boundary: suffixes of lengths k−1 .. (k+1)/2
    for j in 0..h {
        let s = k - 1 - j;
        let c = right_kp_coefficients(kern, &knots[n - s..])?;
        set_column(n - h + j, n - s, &c.coeffs);
    }

    // Φ[l][j] = Σ_w A[w][j] K(x_l, x_w) on the (k−3)/2 band
    let hb = (k - 3) / 2;
    let mut phi = BandedMatrix::zeros(n, hb, hb);
    for j in 0..n {
        let (w_lo, w_hi) = (j.saturating_sub(h), (j + h).min(n - 1));
        let l_lo = j.saturating_sub(hb);
        let l_hi = (j + hb).min(n - 1);
        for l in l_lo..=l_hi {
            let mut acc = 0.0;
            for w in w_lo..=w_hi {
                let c = a.get(w, j);
                if c != 0.0 {
                    acc += c * kern.correlation(knots[l], knots[w]);
                }
            }
            phi.set(l, j, acc);
        }
    }

    Ok(KpBasis { kernel: kern.clone(), knots: knots.to_vec(), a, phi, equally_spaced })
}

impl KpBasis {
    pub fn kernel(&self) -> &HalfIntegerMatern {
        &self.kernel
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Coefficient matrix `A`, bandwidth `(k−1)/2`.
    pub fn a(&self) -> &BandedMatrix {
        &self.a
    }

    /// Value matrix `Φ` with `Φ[l][j] = φ_j(x_l)`, bandwidth `(k−3)/2`.
    pub fn phi(&self) -> &BandedMatrix {
        &self.phi
    }

    pub fn equally_spaced(&self) -> bool {
        self.equally_spaced
    }

    /// Kind of basis function `j` given the assembly layout.
    pub fn kind(&self, j: usize) -> KpKind {
        let h = (self.kernel.k() - 1) / 2;
        let n = self.knots.len();
        if j < h {
            KpKind::LeftSided
        } else if j >= n - h {
            KpKind::RightSided
        } else {
            KpKind::Central
        }
    }

    /// Supporting-knot window (start row, length) of basis function `j`;
    /// identical to the in-band rows of column `j` of `A`.
    pub fn column_window(&self, j: usize) -> (usize, usize) {
        let h = (self.kernel.k() - 1) / 2;
        let n = self.knots.len();
        let lo = j.saturating_sub(h);
        let hi = (j + h).min(n - 1);
        (lo, hi - lo + 1)
    }

    /// Packet coefficients of basis function `j` on its window.
    pub fn column_coeffs(&self, j: usize) -> Vec<f64> {
        let (lo, len) = self.column_window(j);
        (0..len).map(|off| self.a.get(lo + off, j)).collect()
    }

    /// Number of knots ≤ x (the insertion interval index).
    fn interval_index(&self, x: f64) -> usize {
        self.knots.partition_point(|&t| t <= x)
    }

    /// Like [`Self::interval_index`] but tries a caller-provided guess
    /// first; falls back to binary search when the probe misses. On an
    /// equally spaced grid with no hint, the index comes from direct
    /// division instead of a search.
    fn locate(&self, x: f64, hint: Option<usize>) -> usize {
        let n = self.knots.len();
        let consistent = |i: usize| -> bool {
            (i == 0 || self.knots[i - 1] <= x) && (i == n || x < self.knots[i])
        };
        if let Some(h) = hint {
            let mut i = h.min(n);
            for _ in 0..4 {
                if consistent(i) {
                    return i;
                }
                if i < n && x >= self.knots[i] {
                    i += 1;
                } else if i > 0 {
                    i -= 1;
                } else {
                    break;
                }
            }
            if consistent(i) {
                return i;
            }
        } else if self.equally_spaced {
            let gap = self.knots[1] - self.knots[0];
            let guess = ((x - self.knots[0]) / gap).floor() + 1.0;
            let mut i = if guess < 0.0 { 0 } else { (guess as usize).min(n) };
            // guard the floating-point division against the exact answer
            for _ in 0..2 {
                if consistent(i) {
                    return i;
                }
                if i < n && x >= self.knots[i] {
                    i += 1;
                } else if i > 0 {
                    i -= 1;
                } else {
                    break;
                }
            }
            if consistent(i) {
                return i;
            }
        }
        self.interval_index(x)
    }

    /// Values of the ≤ k−1 basis functions whose supports contain `x`.
    ///
    /// Points outside `[x₁, x_n]` are legal; only one-sided packets are
    /// non-zero there. A `hint` (basis index near the expected window) makes
    /// sorted query streams cost O(1) lookups instead of a binary search.
    pub fn evaluate_row(&self, x: f64, hint: Option<usize>) -> BasisRow {
        let n = self.knots.len();
        let h = (self.kernel.k() - 1) / 2;
        let i = self.locate(x, hint);
        // basis indices whose support interior contains x: [i−h, i+h−1]
        let lo = i.saturating_sub(h);
        let hi = (i + h - 1).min(n - 1);
        let mut values = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            let (w_lo, w_len) = self.column_window(j);
            let mut acc = 0.0;
            for w in w_lo..w_lo + w_len {
                acc += self.a.get(w, j) * self.kernel.correlation(x, self.knots[w]);
            }
            values.push(acc);
        }
        BasisRow { window_start: lo, values }
    }

    /// Jointly rescales column `j` of `A` and `Φ`. The packet scale is a
    /// free choice, so this leaves every model quantity unchanged; it exists
    /// so tests can verify exactly that.
    pub fn scale_column(&mut self, j: usize, factor: f64) {
        assert!(factor != 0.0 && factor.is_finite());
        let n = self.knots.len();
        let (lo, len) = self.column_window(j);
        for w in lo..lo + len {
            let v = self.a.get(w, j);
            self.a.set(w, j, v * factor);
        }
        let hb = (self.kernel.k() - 3) / 2;
        for l in j.saturating_sub(hb)..=(j + hb).min(n - 1) {
            let v = self.phi.get(l, j);
            self.phi.set(l, j, v * factor);
        }
    }

    pub fn storage_bytes(&self) -> usize {
        self.a.storage_bytes()
            + self.phi.storage_bytes()
            + self.knots.len() * std::mem::size_of::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cosine(u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        (dot / (nu * nv)).abs()
    }

    #[test]
    fn central_exponential_case() {
        // k = 3, c = 1, a = (−1, 0, 1): coefficients ∝ (1, −2cosh(1), 1)
        let kern = HalfIntegerMatern::new(0, 1.0).unwrap();
        let c = central_kp_coefficients(&kern, &[-1.0, 0.0, 1.0]).unwrap();
        let expected = [1.0, -3.0861612696304874, 1.0];
        assert!(cosine(&c.coeffs, &expected) > 1.0 - 1e-12);
        // normalized form: ℓ∞ = 1, first coefficient positive
        assert_relative_eq!(c.coeffs[1].abs(), 1.0, max_relative = 1e-14);
        assert!(c.coeffs[0] > 0.0);
        assert_relative_eq!(c.coeffs[0], c.coeffs[2], max_relative = 1e-10);

        // the packet vanishes identically right of the window
        for x in [1.0, 1.5, 2.0, 10.0] {
            assert!(c.eval(&kern, x).abs() < 1e-12, "phi({x}) = {}", c.eval(&kern, x));
        }
        // and is nonzero inside
        assert!(c.eval(&kern, 0.0).abs() > 1e-3);
    }

    #[test]
    fn central_shift_invariance() {
        let kern = HalfIntegerMatern::new(1, 0.7).unwrap();
        let a = [0.1, 0.25, 0.3, 0.55, 0.8];
        let c0 = central_kp_coefficients(&kern, &a).unwrap();
        let shifted: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
        let c5 = central_kp_coefficients(&kern, &shifted).unwrap();
        assert!(cosine(&c0.coeffs, &c5.coeffs) > 1.0 - 1e-10);
    }

    #[test]
    fn right_sided_single_equation() {
        // k = 3, s = 2, c = 1, a = (0, 1): A₁e⁰ + A₂e⁻¹ = 0 ⇒ ∝ (−e⁻¹, 1)
        let kern = HalfIntegerMatern::new(0, 1.0).unwrap();
        let c = right_kp_coefficients(&kern, &[0.0, 1.0]).unwrap();
        let expected = [-0.36787944117144233, 1.0];
        assert!(cosine(&c.coeffs, &expected) > 1.0 - 1e-13);
        // support is [0, ∞): vanishes below, alive above
        assert!(c.eval(&kern, -0.5).abs() < 1e-12);
        assert!(c.eval(&kern, 0.5).abs() > 1e-3);
    }

    #[test]
    fn left_sided_mirror() {
        let kern = HalfIntegerMatern::new(0, 1.0).unwrap();
        let c = left_kp_coefficients(&kern, &[0.0, 1.0]).unwrap();
        // mirror of the right-sided example: ∝ (1, −e⁻¹)
        let expected = [1.0, -0.36787944117144233];
        assert!(cosine(&c.coeffs, &expected) > 1.0 - 1e-13);
        assert!(c.eval(&kern, 1.5).abs() < 1e-12);
        assert!(c.eval(&kern, 0.5).abs() > 1e-3);

        // general mirror symmetry: left on a == reversed right on −a
        let kern = HalfIntegerMatern::new(2, 0.6).unwrap();
        let a = [0.05, 0.2, 0.3, 0.42, 0.61, 0.8];
        let l = left_kp_coefficients(&kern, &a).unwrap();
        let neg: Vec<f64> = a.iter().rev().map(|x| -x).collect();
        let r = right_kp_coefficients(&kern, &neg).unwrap();
        let r_rev: Vec<f64> = r.coeffs.iter().rev().copied().collect();
        assert!(cosine(&l.coeffs, &r_rev) > 1.0 - 1e-10);
    }

    #[test]
    fn one_sided_size_bounds() {
        let kern = HalfIntegerMatern::new(1, 1.0).unwrap(); // k = 5
        assert!(right_kp_coefficients(&kern, &[0.0, 1.0]).is_err()); // s = 2 < 3
        assert!(right_kp_coefficients(&kern, &[0.0, 1.0, 2.0, 3.0, 4.0]).is_err()); // s = 5 > 4
        assert!(right_kp_coefficients(&kern, &[0.0, 1.0, 2.0]).is_ok());
        assert!(right_kp_coefficients(&kern, &[0.0, 1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn repeated_knots_rejected() {
        let kern = HalfIntegerMatern::new(0, 1.0).unwrap();
        assert!(matches!(
            central_kp_coefficients(&kern, &[0.0, 0.0, 1.0]),
            Err(Error::DegenerateDesign(_))
        ));
    }

    #[test]
    fn extreme_separation_guarded() {
        let kern = HalfIntegerMatern::new(0, 1e-3).unwrap(); // c = 1000
        assert!(matches!(
            central_kp_coefficients(&kern, &[0.0, 0.5, 1.0]),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn compact_support_random_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [0u32, 1, 2] {
            let kern = HalfIntegerMatern::new(p, 1.0).unwrap();
            let k = kern.k();
            for _ in 0..20 {
                let mut a: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..3.0)).collect();
                a.sort_by(f64::total_cmp);
                if a.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                    continue;
                }
                let c = central_kp_coefficients(&kern, &a).unwrap();
                let inside = (0..100)
                    .map(|i| {
                        let x = a[0] + (a[k - 1] - a[0]) * (i as f64 + 0.5) / 100.0;
                        c.eval(&kern, x).abs()
                    })
                    .fold(0.0f64, f64::max);
                let outside = (0..100)
                    .map(|i| {
                        let t = (i as f64 + 0.5) / 100.0;
                        let x = if i % 2 == 0 { a[0] - 3.0 * t } else { a[k - 1] + 3.0 * t };
                        c.eval(&kern, x).abs()
                    })
                    .fold(0.0f64, f64::max);
                assert!(
                    outside < 1e-10 * inside.max(1e-300),
                    "p={p} leak: outside {outside:.3e} inside {inside:.3e}"
                );
            }
        }
    }

    #[test]
    fn minimal_degree_no_null_space() {
        // fewer than k knots: the central system has only the trivial solution
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for p in [1u32, 2] {
            let kern = HalfIntegerMatern::new(p, 1.0).unwrap();
            let k = kern.k();
            for m in (k - 2)..k {
                let mut a: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..2.0)).collect();
                a.sort_by(f64::total_cmp);
                if a.windows(2).any(|w| w[1] - w[0] < 1e-2) {
                    continue;
                }
                let sv = system_singular_values(&kern, &a, KpKind::Central).unwrap();
                let smallest = sv[sv.len() - 1];
                assert!(
                    smallest > 1e-6 * sv[0],
                    "m={m} k={k}: smallest {smallest:.3e} vs largest {:.3e}",
                    sv[0]
                );
            }
        }
    }

    fn sorted_knots(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut gaps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
        let total: f64 = gaps.iter().sum();
        let mut acc = 0.0;
        for g in gaps.iter_mut() {
            acc += *g / total;
            *g = acc;
        }
        gaps
    }

    #[test]
    fn basis_structure_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for p in [0u32, 1, 2] {
            let kern = HalfIntegerMatern::new(p, 0.8).unwrap();
            let k = kern.k();
            let n = 12;
            let x = sorted_knots(n, &mut rng);
            let basis = build_basis(&kern, &x).unwrap();
            assert_eq!(basis.a().lower_bandwidth(), (k - 1) / 2);
            assert_eq!(basis.phi().lower_bandwidth(), (k - 3) / 2);

            // dense K · A = Φ on every entry (out-of-band must vanish)
            let a = basis.a().to_dense();
            let phi = basis.phi().to_dense();
            let mut worst = 0.0f64;
            for l in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for w in 0..n {
                        acc += kern.correlation(x[l], x[w]) * a[w][j];
                    }
                    worst = worst.max((acc - phi[l][j]).abs());
                }
            }
            assert!(worst < 1e-10, "p={p}: max |K·A − Φ| = {worst:.3e}");
        }
    }

    #[test]
    fn basis_counts_by_kind() {
        // k = 5 on ten knots: 2 left-sided, 6 central, 2 right-sided
        let kern = HalfIntegerMatern::new(1, 1.0).unwrap();
        let x: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let basis = build_basis(&kern, &x).unwrap();
        let kinds: Vec<KpKind> = (0..10).map(|j| basis.kind(j)).collect();
        assert_eq!(kinds.iter().filter(|k| **k == KpKind::LeftSided).count(), 2);
        assert_eq!(kinds.iter().filter(|k| **k == KpKind::Central).count(), 6);
        assert_eq!(kinds.iter().filter(|k| **k == KpKind::RightSided).count(), 2);
        // windows: first central spans knots 0..5, last spans 5..10
        assert_eq!(basis.column_window(2), (0, 5));
        assert_eq!(basis.column_window(7), (5, 5));
        // prefix lengths 3, 4 for the left-sided pair
        assert_eq!(basis.column_window(0), (0, 3));
        assert_eq!(basis.column_window(1), (0, 4));
        assert_eq!(basis.column_window(8), (6, 4));
        assert_eq!(basis.column_window(9), (7, 3));
    }

    #[test]
    fn equally_spaced_phi_diagonal_for_k3() {
        let kern = HalfIntegerMatern::new(0, 1.0).unwrap();
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let basis = build_basis(&kern, &x).unwrap();
        assert!(basis.equally_spaced());
        assert_eq!(basis.phi().lower_bandwidth(), 0);
        assert_eq!(basis.phi().upper_bandwidth(), 0);
        assert_eq!(basis.a().lower_bandwidth(), 1);
        for i in 0..10 {
            assert!(basis.phi().get(i, i).abs() > 0.0);
        }
    }

    #[test]
    fn evaluate_row_matches_phi_at_knots() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let kern = HalfIntegerMatern::new(1, 0.5).unwrap();
        let x = sorted_knots(14, &mut rng);
        let basis = build_basis(&kern, &x).unwrap();
        for i in [0usize, 3, 7, 13] {
            let row = basis.evaluate_row(x[i], None);
            for (off, &v) in row.values.iter().enumerate() {
                let j = row.window_start + off;
                let stored = basis.phi().get(i, j);
                if basis.phi().in_band(i, j) {
                    assert_relative_eq!(v, stored, max_relative = 1e-9, epsilon = 1e-12);
                } else {
                    assert!(v.abs() < 1e-10, "out-of-band value {v:.3e} at ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn evaluate_row_window_between_knots() {
        // k = 3: a point strictly between x₅ and x₆ sees exactly {φ₅, φ₆}
        let kern = HalfIntegerMatern::new(0, 1.0).unwrap();
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let basis = build_basis(&kern, &x).unwrap();
        let xstar = 0.45; // between index 4 and 5 (0-based)
        let row = basis.evaluate_row(xstar, None);
        assert_eq!(row.window_start, 4);
        assert_eq!(row.values.len(), 2);
        assert!(row.values.iter().all(|v| v.abs() > 1e-6));
    }

    #[test]
    fn evaluate_row_outside_domain() {
        let kern = HalfIntegerMatern::new(1, 1.0).unwrap();
        let x: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let basis = build_basis(&kern, &x).unwrap();
        let row = basis.evaluate_row(0.0, None);
        assert_eq!(row.window_start, 0);
        assert_eq!(row.values.len(), 2); // the two left-sided packets
        assert!(row.values.iter().any(|v| v.abs() > 1e-8));
        let row = basis.evaluate_row(2.0, None);
        assert_eq!(row.window_start, 8);
        assert_eq!(row.values.len(), 2); // the two right-sided packets
    }

    #[test]
    fn evaluate_row_hint_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let kern = HalfIntegerMatern::new(2, 0.9).unwrap();
        let x = sorted_knots(30, &mut rng);
        let basis = build_basis(&kern, &x).unwrap();
        let mut hint = None;
        for i in 0..200 {
            let q = -0.2 + 1.4 * (i as f64) / 199.0;
            let with_hint = basis.evaluate_row(q, hint);
            let cold = basis.evaluate_row(q, None);
            assert_eq!(with_hint.window_start, cold.window_start);
            assert_eq!(with_hint.values, cold.values);
            hint = Some(with_hint.window_start);
        }
    }

    #[test]
    fn insufficient_knots() {
        let kern = HalfIntegerMatern::new(1, 1.0).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        assert!(matches!(
            build_basis(&kern, &x),
            Err(Error::InsufficientData { needed: 5, got: 4 })
        ));
    }
}
