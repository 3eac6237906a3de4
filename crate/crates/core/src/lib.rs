//! Exact Gaussian process regression with half-integer Matérn correlations.
//!
//! A Matérn correlation with smoothness `ν = p + 1/2` admits compactly
//! supported linear combinations of kernel translates ("kernel packets").
//! Collecting one packet per data point turns the dense correlation matrix
//! `K` into a product of banded matrices, `K = Φ A⁻¹`, so that fitting,
//! prediction, and likelihood evaluation run in time and storage linear in
//! the number of points instead of cubic.
//!
//! The crate is organized around that factorization:
//!
//! - [`kernel`] — half-integer Matérn correlations and separable products,
//! - [`banded`] — band-storage matrices with pivoted LU and signed
//!   log-determinants,
//! - [`kp`] — construction of the packet coefficients and the banded pair
//!   `(A, Φ)`,
//! - [`gp1d`] — one-dimensional regression, noiseless and noisy, plus
//!   profile maximum likelihood,
//! - [`grid`] — full-grid (Kronecker) and sparse-grid (combination
//!   technique) regression in several dimensions,
//! - [`oracle`] — a deliberately naive dense reference implementation used
//!   as ground truth in tests and benchmarks.

pub mod banded;
pub mod gp1d;
pub mod grid;
pub mod kernel;
pub mod kp;
pub mod oracle;
mod semisep;

pub use banded::{BandedLu, BandedMatrix};
pub use gp1d::{BetaSpec, Gp1dModel, MleResult, MleSearch, Sigma2Spec};
pub use grid::{
    DyadicFamily, FullGridDesign, FullGridModel, GridMean, NestedFamily, SparseGridDesign,
    SparseGridModel,
};
pub use kernel::{HalfIntegerMatern, ProductKernel};
pub use kp::{BasisRow, KpBasis, KpCoefficients, KpKind};
pub use oracle::DenseGpProblem;

/// Natural log of 2π, the constant term of the Gaussian log-density.
pub(crate) const LN_2PI: f64 = 1.8378770664093453;

/// Errors reported by the regression engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Knots were not strictly increasing, or a grid contained duplicates.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    /// Fewer data points than the construction requires.
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Vector or matrix shapes do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A coefficient system was too ill-conditioned to solve reliably.
    #[error("conditioning failure: {0}")]
    Conditioning(String),

    /// Exact singularity encountered during factorization.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// Floating-point breakdown: sign violation, unresolvable residual, or
    /// a quantity that must be nonnegative fell far below zero.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// The regression design matrix has (numerically) dependent columns.
    #[error("collinear regressors: normal equations are singular")]
    CollinearRegressors,

    /// No optimizer start produced a finite objective.
    #[error("optimization failure: {0}")]
    OptimizationFailure(String),

    /// Observations missing or inconsistent with the design.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_strictly_increasing(xs: &[f64], what: &str) -> Result<()> {
    for w in xs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::DegenerateDesign(format!(
                "{what} must be strictly increasing (found {} then {})",
                w[0], w[1]
            )));
        }
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateDesign(format!("{what} contains non-finite values")));
    }
    Ok(())
}
