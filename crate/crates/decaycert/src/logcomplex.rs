//! Complex arithmetic in log-polar form.
//!
//! A [`LogComplex`] stores `ln|z|` and `arg z` instead of cartesian parts, so
//! quantities like `A^(k-1)/sqrt(k)` with `ln|z|` in the hundreds of
//! thousands stay exactly representable. Products, quotients and integer
//! powers are cheap; sums rescale by the dominant magnitude and accumulate
//! with compensated summation so that near-total cancellation keeps every
//! digit the rescaled doubles can carry.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

/// Largest `log_mag` whose modulus still fits in an `f64` (`ln(f64::MAX)`).
pub const MAX_FINITE_LOG: f64 = 709.782712893384;
/// Smallest `log_mag` whose modulus is still a normal `f64` (`ln(f64::MIN_POSITIVE)`).
pub const MIN_NORMAL_LOG: f64 = -708.3964185322641;

/// Conversion to cartesian form left the representable range.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RangeError {
    #[error("modulus overflows f64: log-magnitude {log_mag:.6e} > {MAX_FINITE_LOG}")]
    Overflow { log_mag: f64 },
    #[error("modulus underflows f64: log-magnitude {log_mag:.6e} < {MIN_NORMAL_LOG}")]
    Underflow { log_mag: f64 },
}

/// Reduce an angle to `(-pi, pi]`.
pub fn wrap_phase(p: f64) -> f64 {
    if p > -PI && p <= PI {
        return p;
    }
    let w = p.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// A complex number as `(ln|z|, arg z)`.
///
/// `log_mag = -inf` encodes zero and forces `phase = 0`; otherwise the phase
/// is kept wrapped to `(-pi, pi]`. Plain `PartialEq` is bit-comparison of the
/// normalized fields, so `zero == zero` regardless of how it was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    log_mag: f64,
    phase: f64,
}

impl LogComplex {
    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self { log_mag, phase: 0.0 };
        }
        Self { log_mag, phase: wrap_phase(phase) }
    }

    pub fn zero() -> Self {
        Self { log_mag: f64::NEG_INFINITY, phase: 0.0 }
    }

    pub fn one() -> Self {
        Self { log_mag: 0.0, phase: 0.0 }
    }

    /// `ln|z|`; `-inf` for zero.
    pub fn log_mag(self) -> f64 {
        self.log_mag
    }

    /// `arg z` in `(-pi, pi]`; `0` for zero.
    pub fn phase(self) -> f64 {
        self.phase
    }

    pub fn is_zero(self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn from_cartesian(z: Complex64) -> Self {
        Self::new(z.re.hypot(z.im).ln(), z.im.atan2(z.re))
    }

    pub fn from_real(x: f64) -> Self {
        let phase = if x < 0.0 { PI } else { 0.0 };
        Self::new(x.abs().ln(), phase)
    }

    /// `e^z` for cartesian `z`: `(Re z, Im z)` directly in log-polar form.
    pub fn exp_c(z: Complex64) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn to_cartesian(self) -> Result<Complex64, RangeError> {
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if self.log_mag > MAX_FINITE_LOG {
            return Err(RangeError::Overflow { log_mag: self.log_mag });
        }
        if self.log_mag < MIN_NORMAL_LOG {
            return Err(RangeError::Underflow { log_mag: self.log_mag });
        }
        Ok(Complex64::from_polar(self.log_mag.exp(), self.phase))
    }

    /// Like `to_cartesian`, but a vanishing modulus flushes to zero instead
    /// of erroring. Overflow still errors: only the loss of a subnormal tail
    /// is ever acceptable.
    pub fn to_cartesian_lossy(self) -> Result<Complex64, RangeError> {
        match self.to_cartesian() {
            Err(RangeError::Underflow { .. }) => Ok(Complex64::new(0.0, 0.0)),
            other => other,
        }
    }

    pub fn conj(self) -> Self {
        Self::new(self.log_mag, -self.phase)
    }

    pub fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        Self::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }

    /// Quotient. Dividing a nonzero value by zero yields `log_mag = +inf`
    /// (and zero by zero a NaN magnitude); callers that care must guard.
    pub fn div(self, rhs: Self) -> Self {
        if self.is_zero() && !rhs.is_zero() {
            return Self::zero();
        }
        Self::new(self.log_mag - rhs.log_mag, self.phase - rhs.phase)
    }

    /// `z^n` with the phase multiplied before a single wrap, so no drift
    /// accumulates across repeated squarings. `pow_int(zero, 0)` is `one`.
    pub fn pow_int(self, n: i64) -> Self {
        if self.is_zero() {
            return match n {
                0 => Self::one(),
                _ if n > 0 => Self::zero(),
                _ => Self::new(f64::INFINITY, 0.0),
            };
        }
        let nf = n as f64;
        Self::new(nf * self.log_mag, wrap_phase(nf * self.phase))
    }

    /// Sum of arbitrarily many terms without leaving the log domain.
    ///
    /// The dominant log-magnitude `m` is factored out, the rescaled cartesian
    /// parts (each of modulus at most 1) are accumulated with compensated
    /// summation, and the total is re-encoded as `m + ln(hypot)`. A singleton
    /// passes through bit-exactly; full cancellation returns zero.
    pub fn sum<I: IntoIterator<Item = LogComplex>>(terms: I) -> Self {
        let terms: Vec<LogComplex> = terms.into_iter().filter(|t| !t.is_zero()).collect();
        match terms.len() {
            0 => Self::zero(),
            1 => terms[0],
            _ => {
                let m = terms.iter().map(|t| t.log_mag).fold(f64::NEG_INFINITY, f64::max);
                let mut re = CompensatedSum::default();
                let mut im = CompensatedSum::default();
                for t in &terms {
                    let r = (t.log_mag - m).exp();
                    re.add(r * t.phase.cos());
                    im.add(r * t.phase.sin());
                }
                let (re, im) = (re.value(), im.value());
                Self::new(m + re.hypot(im).ln(), im.atan2(re))
            }
        }
    }
}

impl std::ops::Mul for LogComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        LogComplex::mul(self, rhs)
    }
}

impl std::ops::Div for LogComplex {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        LogComplex::div(self, rhs)
    }
}

impl std::ops::Neg for LogComplex {
    type Output = Self;
    fn neg(self) -> Self {
        if self.is_zero() {
            self
        } else {
            Self::new(self.log_mag, self.phase + PI)
        }
    }
}

impl std::ops::Add for LogComplex {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::sum([self, rhs])
    }
}

impl std::ops::Sub for LogComplex {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::sum([self, -rhs])
    }
}

/// Neumaier-compensated accumulator: the correction term also absorbs the
/// error when an addend exceeds the running sum, which plain Kahan loses.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(n!)`. Exact summation up to `n = 32`, then Stirling's series with
/// three correction terms (relative error below 1e-15 from there on).
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 32 {
        return (2..=n).map(|j| (j as f64).ln()).sum();
    }
    let x = n as f64 + 1.0;
    let x2 = x * x;
    (x - 0.5) * x.ln() - x + 0.5 * TAU.ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2)
        + 1.0 / (1260.0 * x * x2 * x2)
}
