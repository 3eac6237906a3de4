//! Band-storage square matrices with pivoted LU factorization.
//!
//! Storage is by diagonals: a matrix of order `n` with `kl` sub- and `ku`
//! superdiagonals keeps `(kl + ku + 1) · n` entries; everything outside the
//! band is zero by representation. The factorization uses partial pivoting
//! and therefore carries `kl` extra superdiagonals of fill-in, the classic
//! band-LU layout. Partial pivoting is not optional here: the banded factors
//! produced by the kernel-packet construction are not symmetric positive
//! definite on their own, and unpivoted elimination can break down on them.

use crate::{Error, Result};

/// Square banded matrix in diagonal-major storage.
///
/// Entry `(i, j)` lives at `data[(j − i + kl) * n + i]` when
/// `−kl ≤ j − i ≤ ku`; reads outside the band return zero, writes outside
/// the band are rejected.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    /// All-zero banded matrix.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0, "matrix order must be positive");
        assert!(kl < n && ku < n, "bandwidths must be below the order");
        Self { n, kl, ku, data: vec![0.0; (kl + ku + 1) * n] }
    }

    /// Identity (diagonal bandwidths zero).
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        m.data.fill(1.0);
        m
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && i + self.ku >= j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[(j + self.kl - i) * self.n + i]
        } else {
            0.0
        }
    }

    /// Writes an in-band entry; panics on an out-of-band index.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "index ({i}, {j}) outside band kl={} ku={} n={}",
            self.kl,
            self.ku,
            self.n
        );
        self.data[(j + self.kl - i) * self.n + i] = value;
    }

    /// `y = B·v`, O((kl+ku+1)·n) work.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: v.len() });
        }
        let mut y = vec![0.0; self.n];
        self.matvec_into(v, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_into(&self, v: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let n = self.n;
        for d in 0..=(self.kl + self.ku) {
            let band = &self.data[d * n..(d + 1) * n];
            // j = i + d − kl
            let (i_lo, i_hi) = if d >= self.kl {
                (0, n - (d - self.kl))
            } else {
                (self.kl - d, n)
            };
            let off = d as isize - self.kl as isize;
            for i in i_lo..i_hi {
                let j = (i as isize + off) as usize;
                y[i] += band[i] * v[j];
            }
        }
    }

    /// `B1 + alpha·B2`, with bandwidths the pairwise maxima.
    pub fn add_scaled(&self, other: &BandedMatrix, alpha: f64) -> Result<BandedMatrix> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let kl = self.kl.max(other.kl);
        let ku = self.ku.max(other.ku);
        let mut out = BandedMatrix::zeros(self.n, kl, ku);
        for i in 0..self.n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(self.n - 1);
            for j in lo..=hi {
                let v = self.get(i, j) + alpha * other.get(i, j);
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// Dense copy, for small-order tests and oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Heap bytes held by the band storage.
    pub fn storage_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }

    /// Pivoted LU factorization of this matrix.
    pub fn lu(&self) -> Result<BandedLu> {
        BandedLu::factor(self)
    }
}

/// Partial-pivoting LU factorization of a banded matrix.
///
/// The working array holds `kl` multipliers below the diagonal and up to
/// `kl + ku` superdiagonals of `U` (fill-in from row swaps). `solve`
/// replays the pivot/multiplier sequence and back-substitutes.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    kuw: usize, // ku + kl, the fill-in upper bandwidth
    w: Vec<f64>,
    pivots: Vec<usize>,
    pivot_sign: i8,
}

impl BandedLu {
    pub fn factor(b: &BandedMatrix) -> Result<Self> {
        let n = b.n;
        let kl = b.kl;
        let kuw = b.ku + b.kl;
        let diags = kl + kuw + 1;
        let mut w = vec![0.0; diags * n];
        let idx = |i: usize, j: usize| (j + kl - i) * n + i;
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + b.ku).min(n - 1);
            for j in lo..=hi {
                w[idx(i, j)] = b.get(i, j);
            }
        }

        let mut pivots = vec![0usize; n];
        let mut pivot_sign: i8 = 1;
        for j in 0..n {
            let hi = (j + kl).min(n - 1);
            let mut piv = j;
            let mut best = w[idx(j, j)].abs();
            for i in (j + 1)..=hi {
                let v = w[idx(i, j)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularMatrix(format!("zero pivot column at step {j}")));
            }
            pivots[j] = piv;
            let hic = (j + kuw).min(n - 1);
            if piv != j {
                pivot_sign = -pivot_sign;
                for col in j..=hic {
                    w.swap(idx(j, col), idx(piv, col));
                }
            }
            let d = w[idx(j, j)];
            for i in (j + 1)..=hi {
                let m = w[idx(i, j)] / d;
                w[idx(i, j)] = m;
                if m != 0.0 {
                    for col in (j + 1)..=hic {
                        w[idx(i, col)] -= m * w[idx(j, col)];
                    }
                }
            }
        }
        Ok(Self { n, kl, kuw, w, pivots, pivot_sign })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Solves `B x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: rhs.len() });
        }
        let n = self.n;
        let idx = |i: usize, j: usize| (j + self.kl - i) * n + i;
        for j in 0..n {
            rhs.swap(j, self.pivots[j]);
            let hi = (j + self.kl).min(n - 1);
            let xj = rhs[j];
            if xj != 0.0 {
                for i in (j + 1)..=hi {
                    rhs[i] -= self.w[idx(i, j)] * xj;
                }
            }
        }
        for i in (0..n).rev() {
            let hic = (i + self.kuw).min(n - 1);
            let mut acc = rhs[i];
            for col in (i + 1)..=hic {
                acc -= self.w[idx(i, col)] * rhs[col];
            }
            rhs[i] = acc / self.w[idx(i, i)];
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Column-by-column solve for a multi-column right-hand side.
    pub fn solve_columns(&self, cols: &mut [Vec<f64>]) -> Result<()> {
        for c in cols.iter_mut() {
            self.solve_in_place(c)?;
        }
        Ok(())
    }

    /// `(log|det B|, sign of det B)`.
    pub fn logdet(&self) -> Result<(f64, i8)> {
        let n = self.n;
        let idx = |i: usize| (self.kl) * n + i; // main diagonal
        let mut log_abs = 0.0;
        let mut sign = self.pivot_sign;
        for i in 0..n {
            let d = self.w[idx(i)];
            if d == 0.0 {
                return Err(Error::SingularMatrix(format!("zero diagonal in U at {i}")));
            }
            if d < 0.0 {
                sign = -sign;
            }
            log_abs += d.abs().ln();
        }
        Ok((log_abs, sign))
    }

    pub fn storage_bytes(&self) -> usize {
        self.w.len() * std::mem::size_of::<f64>()
            + self.pivots.len() * std::mem::size_of::<usize>()
    }
}
