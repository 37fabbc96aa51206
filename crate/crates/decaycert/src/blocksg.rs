//! The 2x2 upper-triangular block construction over a finite diagonal
//! model: `exp(t*blocks)` with entries `e^{t lambda} [[1, t(-lambda)^-alpha],[0,1]]`
//! per eigenvalue, and the matching block resolvents.
//!
//! Boundedness of the block semigroup in `t` is the finite-dimensional
//! shadow of the `O(1/t)` decay statement, so the sweeps here report
//! suprema rather than asserting limits.

use crate::omega::log_spaced;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("invalid model: {0}")]
    InvalidParameter(String),
    #[error("eigenvalue {0} is off the curve Re = -(1+|Im|)^-alpha")]
    OffCurve(Complex64),
    #[error("lambda {0} coincides with a model eigenvalue")]
    AtEigenvalue(Complex64),
    #[error("time must be {need}, got {t}")]
    BadTime { t: f64, need: &'static str },
}

/// Largest singular value of `[[1, b], [0, 1]]`.
pub fn sigma_unit(b: f64) -> f64 {
    let b = b.abs();
    (1.0 + 0.5 * b * b + 0.5 * b * (b * b + 4.0).sqrt()).sqrt()
}

/// Block resolvent norm together with the smoothed single-power quantity
/// `max_j |lambda - lambda_j|^-1 |lambda_j|^-alpha`, which stays bounded on
/// the right half-plane even though the full norm grows near the curve.
#[derive(Debug, Clone, Copy)]
pub struct BlockResolvent {
    pub norm: f64,
    pub smoothed: f64,
}

/// Finite diagonal surrogate: eigenvalues sampled exactly on the boundary
/// curve of `S` (the worst case for every supremum computed here).
#[derive(Debug, Clone)]
pub struct DiagonalModel {
    alpha: f64,
    eigs: Vec<Complex64>,
}

impl DiagonalModel {
    pub fn new(alpha: f64, eigs: Vec<Complex64>) -> Result<Self, BlockError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(BlockError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if eigs.is_empty() {
            return Err(BlockError::InvalidParameter("need at least one eigenvalue".into()));
        }
        for &l in &eigs {
            let want = -(1.0 + l.im.abs()).powf(-alpha);
            if !((l.re - want).abs() <= 1e-12 * want.abs()) {
                return Err(BlockError::OffCurve(l));
            }
        }
        Ok(Self { alpha, eigs })
    }

    /// `count` on-curve eigenvalues: one at height 0, the rest at heights
    /// geometrically spaced over `[1e-3, y_max]`.
    pub fn log_spaced_model(alpha: f64, count: usize, y_max: f64) -> Result<Self, BlockError> {
        if count < 2 || !(y_max > 1e-3) {
            return Err(BlockError::InvalidParameter(format!(
                "need count >= 2 and y_max > 1e-3, got ({count}, {y_max})"
            )));
        }
        let mut eigs = Vec::with_capacity(count);
        eigs.push(Complex64::new(-1.0, 0.0));
        for y in log_spaced(1e-3, y_max, count - 1) {
            eigs.push(Complex64::new(-(1.0 + y).powf(-alpha), y));
        }
        Self::new(alpha, eigs)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigs
    }

    /// `max_j e^(t Re lambda_j) * sigma_max([[1, t|lambda_j|^-alpha],[0,1]])`:
    /// the exact norm of the block semigroup at time `t`.
    pub fn block_exp_norm(&self, t: f64) -> Result<f64, BlockError> {
        if !(t >= 0.0) {
            return Err(BlockError::BadTime { t, need: "nonnegative" });
        }
        Ok(self
            .eigs
            .iter()
            .map(|l| (t * l.re).exp() * sigma_unit(t * l.norm().powf(-self.alpha)))
            .fold(0.0, f64::max))
    }

    /// `max_j e^(t Re lambda_j) |lambda_j|^-alpha` — the off-diagonal decay
    /// quantity; `t * corner_decay(t) <= block_exp_norm(t)` always, since
    /// the corner entry is dominated by the full spectral norm.
    pub fn corner_decay(&self, t: f64) -> Result<f64, BlockError> {
        if !(t > 0.0) {
            return Err(BlockError::BadTime { t, need: "positive" });
        }
        Ok(self
            .eigs
            .iter()
            .map(|l| (t * l.re).exp() * l.norm().powf(-self.alpha))
            .fold(0.0, f64::max))
    }

    /// Norm of the block resolvent at `lambda`: per eigenvalue the block is
    /// `r [[1, r(-lambda_j)^-alpha],[0,1]]` with `r = 1/(lambda-lambda_j)`,
    /// so the norm is `|r| sigma_unit(|r| |lambda_j|^-alpha)`.
    pub fn block_resolvent_norm(&self, lambda: Complex64) -> Result<BlockResolvent, BlockError> {
        if self.eigs.contains(&lambda) {
            return Err(BlockError::AtEigenvalue(lambda));
        }
        let mut norm = 0.0f64;
        let mut smoothed = 0.0f64;
        for l in &self.eigs {
            let r = 1.0 / (lambda - l).norm();
            let damp = l.norm().powf(-self.alpha);
            norm = norm.max(r * sigma_unit(r * damp));
            smoothed = smoothed.max(r * damp);
        }
        Ok(BlockResolvent { norm, smoothed })
    }
}
