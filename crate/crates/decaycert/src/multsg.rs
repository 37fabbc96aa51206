//! The normal multiplication-operator model over the spectral set `S`:
//! exact resolvent norms, orbit-decay suprema, and the Plancherel-type
//! boundedness value for finite diagonal surrogates.
//!
//! Everything reduces to one-dimensional extremal problems along the
//! boundary curve of `S`, which makes this model the ground truth the
//! block construction and the measure certificates are compared against.

use crate::omega::{golden_min, log_spaced, OmegaError, OmegaRegion};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MultError {
    #[error(transparent)]
    Region(#[from] OmegaError),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("weight vector length {weights} does not match {eigs} eigenvalues")]
    LengthMismatch { eigs: usize, weights: usize },
    #[error("eigenvalue {0} must have Re < 0")]
    SpectrumSide(Complex64),
    #[error("xi must be positive, got {0}")]
    NonpositiveXi(f64),
}

/// One point of a measured-vs-reference curve.
#[derive(Debug, Clone, Copy)]
pub struct CurveRow {
    pub x: f64,
    pub value: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// A curve plus inf/sup of `ratio` over its upper half (`None` for a
/// single-point grid, which has no tail to summarize).
#[derive(Debug, Clone)]
pub struct RatioCurve {
    pub rows: Vec<CurveRow>,
    pub tail_inf_sup: Option<(f64, f64)>,
}

/// The three equivalent decay statements, each as measured-vs-reference:
/// resolvent growth along the imaginary axis, decay of the orbit damped by
/// the alpha-th inverse power, and decay damped by the first inverse power.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub resolvent: RatioCurve,
    pub orbit_alpha: RatioCurve,
    pub orbit_one: RatioCurve,
}

/// Supremum location and value returned by the orbit sweeps.
#[derive(Debug, Clone, Copy)]
pub struct OrbitPoint {
    pub value: f64,
    pub y_star: f64,
}

/// Multiplication model with spectrum on the closed complement of the
/// region `{Re z > -(1+|Im z|)^-alpha}` (curve constant fixed at 1).
#[derive(Debug, Clone, Copy)]
pub struct MultModel {
    alpha: f64,
    region: OmegaRegion,
}

impl MultModel {
    pub fn new(alpha: f64) -> Result<Self, MultError> {
        Ok(Self { alpha, region: OmegaRegion::new(alpha, 1.0)? })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn region(&self) -> &OmegaRegion {
        &self.region
    }

    /// `1 / dist(lambda, S)` — exact for a normal operator.
    pub fn resolvent_norm(&self, lambda: Complex64) -> Result<f64, MultError> {
        Ok(1.0 / self.region.dist_to_s(lambda)?)
    }

    /// `sup_{zeta in S} e^{t Re zeta} / |zeta|^alpha`, attained on the
    /// boundary curve: exponential decay in `Re zeta` beats the polynomial
    /// gain deeper inside `S`.
    pub fn orbit_norm(&self, t: f64) -> Result<OrbitPoint, MultError> {
        self.orbit_norm_with_power(t, self.alpha)
    }

    /// Same supremum with an arbitrary damping power `|zeta|^-p`.
    ///
    /// Maximizes `h(y) = -t(1+y)^-alpha - (p/2) ln((1+y)^-2alpha + y^2)`
    /// over a geometric grid reaching `10 (1+t)^(1/alpha)` (the maximizer
    /// scales like `t^(1/alpha)`), then golden-sections the winning bracket.
    pub fn orbit_norm_with_power(&self, t: f64, p: f64) -> Result<OrbitPoint, MultError> {
        if !(t >= 0.0) {
            return Err(MultError::NegativeTime(t));
        }
        let alpha = self.alpha;
        let h = |y: f64| {
            let u = 1.0 + y;
            -t * u.powf(-alpha) - 0.5 * p * (u.powf(-2.0 * alpha) + y * y).ln()
        };
        let y_max = 10.0 * (1.0 + t).powf(1.0 / alpha);
        let mut ys = Vec::with_capacity(512);
        ys.push(0.0);
        ys.extend(log_spaced(y_max * 1e-6, y_max, 511));
        let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
        for (i, &y) in ys.iter().enumerate() {
            let v = h(y);
            if v > best {
                best_i = i;
                best = v;
            }
        }
        let lo = ys[best_i.saturating_sub(1)];
        let hi = ys[(best_i + 1).min(ys.len() - 1)];
        let tol = 4.0 * f64::EPSILON * (1.0 + hi);
        let (y_ref, neg) = golden_min(|y| -h(y), lo, hi, tol);
        if -neg > best {
            Ok(OrbitPoint { value: (-neg).exp(), y_star: y_ref })
        } else {
            Ok(OrbitPoint { value: best.exp(), y_star: ys[best_i] })
        }
    }

    /// Paired measured/reference curves for the three decay statements,
    /// with tail ratio statistics for each.
    pub fn equivalence_curves(&self, t_grid: &[f64], s_grid: &[f64]) -> Result<EquivalenceReport, MultError> {
        check_grid(t_grid, "t")?;
        check_grid(s_grid, "s")?;
        let alpha = self.alpha;
        let resolvent = ratio_curve(s_grid, |s| {
            Ok(CurveRowParts { value: self.resolvent_norm(Complex64::new(0.0, s))?, reference: (1.0 + s.abs()).powf(alpha) })
        })?;
        let orbit_alpha = ratio_curve(t_grid, |t| {
            Ok(CurveRowParts { value: self.orbit_norm(t)?.value, reference: 1.0 / t })
        })?;
        let orbit_one = ratio_curve(t_grid, |t| {
            Ok(CurveRowParts { value: self.orbit_norm_with_power(t, 1.0)?.value, reference: t.powf(-1.0 / alpha) })
        })?;
        Ok(EquivalenceReport { resolvent, orbit_alpha, orbit_one })
    }
}

struct CurveRowParts {
    value: f64,
    reference: f64,
}

fn check_grid(grid: &[f64], name: &str) -> Result<(), MultError> {
    if grid.is_empty() {
        return Err(MultError::BadGrid(format!("{name}-grid is empty")));
    }
    if !grid.iter().all(|&x| x > 0.0 && x.is_finite()) {
        return Err(MultError::BadGrid(format!("{name}-grid must be positive and finite")));
    }
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(MultError::BadGrid(format!("{name}-grid must be strictly increasing")));
    }
    Ok(())
}

fn ratio_curve<F>(grid: &[f64], mut eval: F) -> Result<RatioCurve, MultError>
where
    F: FnMut(f64) -> Result<CurveRowParts, MultError>,
{
    let mut rows = Vec::with_capacity(grid.len());
    for &x in grid {
        let parts = eval(x)?;
        rows.push(CurveRow { x, value: parts.value, reference: parts.reference, ratio: parts.value / parts.reference });
    }
    let tail_inf_sup = if rows.len() < 2 {
        None
    } else {
        let tail = &rows[rows.len() / 2..];
        let inf = tail.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let sup = tail.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        Some((inf, sup))
    };
    Ok(RatioCurve { rows, tail_inf_sup })
}

/// Closed form of `xi * integral ||R(xi + i eta, A) x||^2 d eta / pi-free`
/// for a diagonal model: `xi * sum_j |x_j|^2 pi / (xi - Re lambda_j)`.
/// Bounded by `pi ||x||^2` for every `xi > 0`.
pub fn plancherel_criterion_value(
    eigs: &[Complex64],
    weights: &[Complex64],
    xi: f64,
) -> Result<f64, MultError> {
    if eigs.len() != weights.len() {
        return Err(MultError::LengthMismatch { eigs: eigs.len(), weights: weights.len() });
    }
    if !(xi > 0.0) {
        return Err(MultError::NonpositiveXi(xi));
    }
    if let Some(&bad) = eigs.iter().find(|l| !(l.re < 0.0)) {
        return Err(MultError::SpectrumSide(bad));
    }
    Ok(eigs
        .iter()
        .zip(weights)
        .map(|(l, x)| xi * x.norm_sqr() * PI / (xi - l.re))
        .sum())
}
