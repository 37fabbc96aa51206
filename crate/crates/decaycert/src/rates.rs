//! Rate functions `M`, the associated `M_log`, its numeric inverse, and the
//! decay envelopes they induce.
//!
//! `M` models resolvent growth along the imaginary axis; the decay envelope
//! for the damped orbit at time `t` is `C / M_log^{-1}(t/C)`. For polynomial
//! rates this specializes to the classical `(log t / t)^{1/alpha}` shape,
//! exposed directly as [`poly_decay_bound`].

use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("invalid rate parameter: {0}")]
    InvalidParameter(String),
    #[error("eta must be nonnegative, got {0}")]
    NegativeEta(f64),
    #[error("target {y} lies below the range of m_log (minimum {min})")]
    BelowRange { y: f64, min: f64 },
    #[error("decay bound requires t >= 2, got {0}")]
    SmallTime(f64),
    #[error("invalid rate table: {0}")]
    InvalidTable(String),
    #[error("reading rate table: {0}")]
    Csv(#[from] csv::Error),
}

/// A continuous non-decreasing rate `eta -> M(eta) > 0`.
#[derive(Debug, Clone)]
pub enum RateFunction {
    /// `M(eta) = scale * (1 + eta)^exponent`.
    Polynomial { scale: f64, exponent: f64 },
    /// Piecewise-linear interpolation of `(eta, M)` samples; beyond the last
    /// sample the final secant slope continues, and evaluations there carry
    /// an extrapolation flag.
    Tabulated { points: Vec<(f64, f64)> },
}

impl RateFunction {
    pub fn polynomial(scale: f64, exponent: f64) -> Result<Self, RateError> {
        if !(scale > 0.0) || !(exponent > 0.0) {
            return Err(RateError::InvalidParameter(format!(
                "polynomial rate needs scale > 0 and exponent > 0, got ({scale}, {exponent})"
            )));
        }
        Ok(Self::Polynomial { scale, exponent })
    }

    /// Validates on construction: at least two samples, `eta` strictly
    /// increasing from 0 (so the rate is defined on all of `eta >= 0`),
    /// values positive and non-decreasing.
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self, RateError> {
        if points.len() < 2 {
            return Err(RateError::InvalidTable(format!(
                "need at least 2 samples, got {}",
                points.len()
            )));
        }
        if points[0].0 != 0.0 {
            return Err(RateError::InvalidTable(format!(
                "first sample must sit at eta = 0, got {}",
                points[0].0
            )));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(RateError::InvalidTable(format!(
                    "eta samples must be strictly increasing: {} then {}",
                    w[0].0, w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(RateError::InvalidTable(format!(
                    "rate values must be non-decreasing: {} then {}",
                    w[0].1, w[1].1
                )));
            }
        }
        if !points.iter().all(|&(e, m)| e.is_finite() && m.is_finite() && m > 0.0) {
            return Err(RateError::InvalidTable("samples must be finite with M > 0".into()));
        }
        Ok(Self::Tabulated { points })
    }

    /// Load a two-column `eta, M` CSV. A non-numeric first line is treated
    /// as a header; anything malformed later is an error.
    pub fn from_csv_path(path: &Path) -> Result<Self, RateError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |j: usize| -> Option<f64> {
                record.get(j).and_then(|s| s.parse::<f64>().ok())
            };
            match (parse(0), parse(1)) {
                (Some(e), Some(m)) => points.push((e, m)),
                _ if i == 0 => continue,
                _ => {
                    return Err(RateError::InvalidTable(format!(
                        "line {}: expected two numeric columns, got {:?}",
                        i + 1,
                        record
                    )))
                }
            }
        }
        Self::tabulated(points)
    }

    /// `M(eta)` together with a flag marking extrapolation past the table.
    /// Polynomial rates never extrapolate.
    pub fn eval_flagged(&self, eta: f64) -> Result<(f64, bool), RateError> {
        if eta < 0.0 {
            return Err(RateError::NegativeEta(eta));
        }
        match self {
            Self::Polynomial { scale, exponent } => Ok((scale * (1.0 + eta).powf(*exponent), false)),
            Self::Tabulated { points } => {
                let last = points.len() - 1;
                if eta >= points[last].0 {
                    let (e0, m0) = points[last - 1];
                    let (e1, m1) = points[last];
                    let slope = (m1 - m0) / (e1 - e0);
                    return Ok((m1 + slope * (eta - e1), eta > e1));
                }
                let hi = points.partition_point(|&(e, _)| e <= eta).max(1);
                let (e0, m0) = points[hi - 1];
                let (e1, m1) = points[hi];
                Ok((m0 + (m1 - m0) * (eta - e0) / (e1 - e0), false))
            }
        }
    }

    pub fn eval(&self, eta: f64) -> Result<f64, RateError> {
        Ok(self.eval_flagged(eta)?.0)
    }

    /// `M_log(eta) = M(eta) * (log(1 + M(eta)) + log(1 + eta))`; strictly
    /// increasing whenever `M > 0`, since the second log term is.
    pub fn m_log(&self, eta: f64) -> Result<f64, RateError> {
        let m = self.eval(eta)?;
        Ok(m * ((1.0 + m).ln() + (1.0 + eta).ln()))
    }

    /// Solve `m_log(eta) = y` by geometric bracketing plus bisection, to a
    /// residual of `1e-9 * max(1, y)`.
    pub fn invert_m_log(&self, y: f64) -> Result<f64, RateError> {
        if !y.is_finite() {
            return Err(RateError::InvalidParameter(format!("inversion target {y} not finite")));
        }
        let min = self.m_log(0.0)?;
        if y < min {
            return Err(RateError::BelowRange { y, min });
        }
        if y == min {
            return Ok(0.0);
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        while self.m_log(hi)? < y {
            lo = hi;
            hi *= 4.0;
        }
        let tol = 1e-9 * y.abs().max(1.0);
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..120 {
            mid = 0.5 * (lo + hi);
            let v = self.m_log(mid)?;
            if (v - y).abs() <= tol {
                break;
            }
            if v < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }

    /// Decay envelope `C / m_log^{-1}(t / C)` for a damped orbit at time `t`.
    pub fn decay_envelope(&self, c: f64, t: f64) -> Result<f64, RateError> {
        if !(c > 0.0) {
            return Err(RateError::InvalidParameter(format!("envelope constant must be > 0, got {c}")));
        }
        Ok(c / self.invert_m_log(t / c)?)
    }
}

/// The polynomial-rate decay envelope `(log t / t)^{1/alpha}`, valid from
/// `t = 2` on (so the logarithm is safely positive).
pub fn poly_decay_bound(alpha: f64, t: f64) -> Result<f64, RateError> {
    if !(alpha > 0.0) {
        return Err(RateError::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    if t < 2.0 {
        return Err(RateError::SmallTime(t));
    }
    Ok((t.ln() / t).powf(1.0 / alpha))
}
