//! Staged assembly: a damped, phase-aligned series of ring measures whose
//! thresholds and slacks telescope. Each stage adds a measure that is
//! negligible where the earlier ones live, below its own threshold, and far
//! beyond its own peak, so the finished function decays everywhere except
//! near the stage peaks `t = k_n` — and there the aligned phases make the
//! peaks add up instead of cancelling.

use crate::logcomplex::{LogComplex, RangeError};
use crate::omega::{log_spaced, OmegaRegion};
use crate::ringmeasure::{min_feasible_h, MeasureError, RingMeasure};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{E, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StageError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error("{z} lies outside the analyticity region")]
    OutsideRegion { z: Complex64 },
    #[error(
        "threshold search for stage {stage} gave up after {doublings} doublings from {start:.3e}: \
         stage {offender}'s transform still reaches 1e{worst_log10:.2} (allowed {eps:.3e})"
    )]
    ThresholdSearchFailed {
        stage: u32,
        doublings: u32,
        start: f64,
        offender: u32,
        worst_log10: f64,
        eps: f64,
    },
    #[error("no feasible height for stage {stage} at or below {cap:.3e}")]
    HSearchFailed { stage: u32, cap: f64 },
    #[error("stage {m} is not built (have {built})")]
    NoStage { m: u32, built: u32 },
}

/// Damping weight applied to stage `n` as `gamma(k_n)^(1/alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaWeight {
    /// `gamma(t) = 1/ln(e + t)`: the default, decaying just slowly enough
    /// that the damped peaks still defeat any faster envelope.
    InverseLogEPlus,
    /// `gamma = 1`: undamped variant, off by default.
    Constant,
}

impl GammaWeight {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            GammaWeight::InverseLogEPlus => 1.0 / (E + t).ln(),
            GammaWeight::Constant => 1.0,
        }
    }
}

/// Conventional damping-scale choice for given decay exponents.
pub fn default_psi(alpha: f64, beta: f64) -> f64 {
    0.8 * (beta - 0.5 * alpha)
}

/// One rung of the ladder: a measure, the threshold and slack it was built
/// against, and the phase chosen to align its peak with the earlier rungs.
#[derive(Debug, Clone)]
pub struct Stage {
    index: u32,
    threshold: f64,
    slack: f64,
    measure: RingMeasure,
    phase: Complex64,
}

impl Stage {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn measure(&self) -> &RingMeasure {
        &self.measure
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SharpnessReport {
    pub stage: u32,
    pub t: f64,
    /// `(t / (gamma(t) ln t)) |tail(t)|^alpha` at the stage peak.
    pub ratio: f64,
    pub tail_mag: f64,
    /// Modulus of the stage's own weighted term at its peak.
    pub own_term: f64,
    /// Modulus of the aligned earlier-stage partial sum there.
    pub aligned_prior: f64,
    /// Modulus of the later-stage partial sum there.
    pub later_correction: f64,
}

/// The staged function `f(t) = sum of phase_n gamma(k_n)^(1/alpha) L mu_n(t)`
/// together with the construction state needed to keep extending it.
#[derive(Debug, Clone)]
pub struct StagedFunction {
    alpha: f64,
    beta: f64,
    psi: f64,
    gamma: GammaWeight,
    stages: Vec<Stage>,
}

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Interior offset used when probing just inside the region boundary.
const INSIDE: f64 = 1.0 - 1e-9;

impl StagedFunction {
    pub fn new(alpha: f64, beta: f64, psi: f64, gamma: GammaWeight) -> Result<Self, StageError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(StageError::InvalidParameter(format!("alpha = {alpha}")));
        }
        if !(beta > 0.5 * alpha) || !beta.is_finite() {
            return Err(StageError::InvalidParameter(format!(
                "beta = {beta} must exceed alpha/2 = {}",
                0.5 * alpha
            )));
        }
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(StageError::InvalidParameter(format!("psi = {psi}")));
        }
        Ok(Self { alpha, beta, psi, gamma, stages: Vec::new() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn gamma(&self) -> GammaWeight {
        self.gamma
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn region(&self) -> OmegaRegion {
        OmegaRegion::new(self.alpha, 1.0).expect("alpha validated at construction")
    }

    fn gamma_pow(&self, t: f64) -> f64 {
        self.gamma.eval(t).powf(1.0 / self.alpha)
    }

    fn stage_slice_index(&self, m: u32) -> Result<usize, StageError> {
        if m == 0 || m as usize > self.stages.len() {
            return Err(StageError::NoStage { m, built: self.stages.len() as u32 });
        }
        Ok(m as usize - 1)
    }

    /// Weighted tail term of one stage at time `t`.
    fn tail_term(&self, stage: &Stage, t: f64) -> Result<LogComplex, MeasureError> {
        let weight = self.gamma_pow(stage.measure.k() as f64);
        Ok(LogComplex::from_cartesian(stage.phase)
            * LogComplex::from_real(weight)
            * stage.measure.laplace_integral(t)?)
    }

    /// Builds the next stage: picks the threshold past the previous peaks,
    /// searches for the smallest workable height, then aligns the phase.
    pub fn extend(&mut self) -> Result<(), StageError> {
        let index = self.stages.len() as u32 + 1;
        let slack = 0.5f64.powi(index as i32);
        let threshold = self.find_threshold(index)?;
        let measure = self.find_measure(index, threshold, slack)?;
        let phase = self.alignment_phase(&self.stages, &measure)?;
        self.stages.push(Stage { index, threshold, slack, measure, phase });
        Ok(())
    }

    /// Recomputes the aligned phase of stage `m` from the stages before it.
    /// For a built stage this reproduces the stored phase.
    pub fn choose_phase(&self, m: u32) -> Result<Complex64, StageError> {
        let idx = self.stage_slice_index(m)?;
        self.alignment_phase(&self.stages[..idx], &self.stages[idx].measure)
    }

    fn alignment_phase(
        &self,
        priors: &[Stage],
        measure: &RingMeasure,
    ) -> Result<Complex64, StageError> {
        let t = measure.k() as f64;
        let term = measure.laplace_integral(t)?;
        if priors.is_empty() || term.is_zero() {
            return Ok(ONE);
        }
        let mut parts = Vec::with_capacity(priors.len());
        for s in priors {
            parts.push(self.tail_term(s, t)?);
        }
        let target = LogComplex::sum(parts.iter().copied());
        if target.is_zero() {
            return Ok(ONE);
        }
        Ok(Complex64::from_polar(1.0, target.phase() - term.phase()))
    }

    /// Smallest threshold (doubling from twice the previous peak) past which
    /// every earlier stage's transforms sit below that stage's own slack.
    fn find_threshold(&self, stage: u32) -> Result<f64, StageError> {
        let Some(last) = self.stages.last() else {
            return Ok(1.0);
        };
        let start = 2.0 * last.measure.k() as f64;
        let mut q = start;
        let mut worst = (0u32, f64::NEG_INFINITY, 0.0);
        for _ in 0..60 {
            match self.leakage_violation(q)? {
                None => return Ok(q),
                Some(v) => {
                    worst = v;
                    q *= 2.0;
                }
            }
        }
        Err(StageError::ThresholdSearchFailed {
            stage,
            doublings: 60,
            start,
            offender: worst.0,
            worst_log10: worst.1 / std::f64::consts::LN_10,
            eps: worst.2,
        })
    }

    /// Worst slack violation of any earlier stage beyond candidate
    /// threshold `q`, or `None` when all probes pass. Probes cover six
    /// dyadic annuli: boundary points, interior rays, and a time ladder.
    fn leakage_violation(&self, q: f64) -> Result<Option<(u32, f64, f64)>, StageError> {
        let region = self.region();
        let angles =
            [PI / 24.0, -PI / 24.0, PI / 6.0, -PI / 6.0, PI / 3.0, -PI / 3.0, 1.5208, -1.5208];
        let mut zs = Vec::new();
        for ann in 0..6 {
            let lo = q * f64::powi(2.0, ann);
            let hi = 2.0 * lo;
            for y in log_spaced(lo, hi, 256) {
                let re = region.boundary_re(y) * INSIDE;
                zs.push(Complex64::new(re, y));
                zs.push(Complex64::new(re, -y));
            }
            for &th in &angles {
                for r in log_spaced(lo, hi, 64) {
                    zs.push(Complex64::from_polar(r, th));
                }
            }
        }
        let ts = log_spaced(q * (1.0 + 1e-9), 64.0 * q, 512);

        let mut worst: Option<(u32, f64, f64)> = None;
        for s in &self.stages {
            let ln_eps = s.slack.ln();
            let z_logs = zs
                .par_iter()
                .map(|&z| s.measure.cauchy_closed(z).map(|v| v.log_mag()))
                .collect::<Result<Vec<_>, _>>()?;
            let t_logs = ts
                .par_iter()
                .map(|&t| s.measure.laplace(t).map(|v| v.log_mag()))
                .collect::<Result<Vec<_>, _>>()?;
            for log in z_logs.into_iter().chain(t_logs) {
                if log > ln_eps && worst.is_none_or(|(_, w, _)| log - ln_eps > w) {
                    worst = Some((s.index, log - ln_eps, s.slack));
                }
            }
        }
        Ok(worst.map(|(idx, excess, eps)| (idx, excess + eps.ln(), eps)))
    }

    /// Smallest height whose measure clears the stage's own floors:
    /// `k` beyond the threshold, the transforms below the slack wherever the
    /// stage must stay quiet. Doubling to bracket, then bisection keeping
    /// the upper end feasible.
    fn find_measure(&self, stage: u32, q: f64, eps: f64) -> Result<RingMeasure, StageError> {
        let h0 = min_feasible_h(self.alpha, self.beta, self.psi).ok_or_else(|| {
            StageError::InvalidParameter(format!(
                "no workable height for alpha = {}, beta = {}, psi = {}",
                self.alpha, self.beta, self.psi
            ))
        })?;
        if let Some(m) = self.stage_feasible(h0, q, eps)? {
            return Ok(m);
        }
        let mut lo = h0;
        let mut hi = h0;
        let mut best = None;
        for _ in 0..60 {
            lo = hi;
            hi *= 2.0;
            best = self.stage_feasible(hi, q, eps)?;
            if best.is_some() {
                break;
            }
        }
        let Some(mut found) = best else {
            return Err(StageError::HSearchFailed { stage, cap: hi });
        };
        for _ in 0..40 {
            if hi - lo <= 1e-3 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.stage_feasible(mid, q, eps)? {
                Some(m) => {
                    found = m;
                    hi = mid;
                }
                None => lo = mid,
            }
        }
        Ok(found)
    }

    /// Feasibility of height `h` for a stage with threshold `q`, slack
    /// `eps`: the measure must build, peak past the threshold, and hold its
    /// quiet floors — the time transform below `eps` up to the threshold,
    /// the integrated transform below the time-weighted floor on both quiet
    /// windows, and the frequency transform below `eps` on the boundary band
    /// inside the threshold (which forces the atom ring itself past it).
    fn stage_feasible(
        &self,
        h: f64,
        q: f64,
        eps: f64,
    ) -> Result<Option<RingMeasure>, StageError> {
        let m = match RingMeasure::build(self.alpha, self.beta, h, self.psi, q, eps) {
            Ok(m) => m,
            Err(MeasureError::KTooSmall { .. } | MeasureError::ConstraintOne { .. }) => {
                return Ok(None)
            }
            Err(e) => return Err(e.into()),
        };
        if (m.k() as f64) <= q {
            return Ok(None);
        }
        let ln_eps = eps.ln();

        let mut ts = vec![0.0];
        ts.extend(log_spaced(1e-3, q, 200));
        for t in ts {
            if m.laplace(t)?.log_mag() > ln_eps {
                return Ok(None);
            }
        }

        for t in log_spaced(1e-3, q, 100)
            .into_iter()
            .chain(log_spaced(2.0 * m.k() as f64, 10.0 * m.a(), 100))
        {
            if self.alpha * m.laplace_integral(t)?.log_mag() > ln_eps - (t + 1.0).ln() {
                return Ok(None);
            }
        }

        let region = self.region();
        let mut ys = log_spaced(1e-3, q, 120);
        if 0.5 * h < q {
            ys.extend(log_spaced(0.5 * h, q, 80));
        }
        for y in ys {
            for sign in [1.0, -1.0] {
                let z = Complex64::new(region.boundary_re(y) * INSIDE, sign * y);
                if m.cauchy_closed(z)?.log_mag() > ln_eps {
                    return Ok(None);
                }
            }
        }
        Ok(Some(m))
    }

    /// `f(t)`: the weighted sum of the stage time transforms.
    pub fn eval_f(&self, t: f64) -> Result<Complex64, StageError> {
        let mut terms = Vec::with_capacity(self.stages.len());
        for s in &self.stages {
            let weight = self.gamma_pow(s.measure.k() as f64);
            terms.push(
                LogComplex::from_cartesian(s.phase)
                    * LogComplex::from_real(weight)
                    * s.measure.laplace(t)?,
            );
        }
        Ok(LogComplex::sum(terms.iter().copied()).to_cartesian_lossy()?)
    }

    /// `f^(z)`: the weighted sum of the stage frequency transforms.
    /// Defined on the analyticity region only.
    pub fn eval_transform(&self, z: Complex64) -> Result<Complex64, StageError> {
        if !self.region().contains(z) {
            return Err(StageError::OutsideRegion { z });
        }
        let mut terms = Vec::with_capacity(self.stages.len());
        for s in &self.stages {
            let weight = self.gamma_pow(s.measure.k() as f64);
            terms.push(
                LogComplex::from_cartesian(s.phase)
                    * LogComplex::from_real(weight)
                    * s.measure.cauchy_closed(z)?,
            );
        }
        Ok(LogComplex::sum(terms.iter().copied()).to_cartesian_lossy()?)
    }

    /// `tail(t) = -integral of f over [t, infinity)`, in closed form
    /// through the stage integrated transforms.
    pub fn tail(&self, t: f64) -> Result<Complex64, StageError> {
        let mut terms = Vec::with_capacity(self.stages.len());
        for s in &self.stages {
            terms.push(self.tail_term(s, t)?);
        }
        Ok(-LogComplex::sum(terms.iter().copied()).to_cartesian_lossy()?)
    }

    /// Peak sharpness of stage `m`: the normalized ratio at `t = k_m`, with
    /// the lower-bound decomposition (own peak + aligned earlier stages -
    /// later-stage correction) reported alongside.
    pub fn sharpness_ratio(&self, m: u32) -> Result<SharpnessReport, StageError> {
        let idx = self.stage_slice_index(m)?;
        let t = self.stages[idx].measure.k() as f64;
        let mut terms = Vec::with_capacity(self.stages.len());
        for s in &self.stages {
            terms.push(self.tail_term(s, t)?);
        }
        let tail_mag = LogComplex::sum(terms.iter().copied()).log_mag().exp();
        Ok(SharpnessReport {
            stage: m,
            t,
            ratio: t / (self.gamma.eval(t) * t.ln()) * tail_mag.powf(self.alpha),
            tail_mag,
            own_term: terms[idx].log_mag().exp(),
            aligned_prior: LogComplex::sum(terms[..idx].iter().copied()).log_mag().exp(),
            later_correction: LogComplex::sum(terms[idx + 1..].iter().copied()).log_mag().exp(),
        })
    }

    /// Largest value of `|tail(t)| / ((ln t)/t)^(1/alpha)` over the stage's
    /// active window: the constant pinning the tail to the decay envelope.
    pub fn envelope_constant(&self, m: u32) -> Result<f64, StageError> {
        let idx = self.stage_slice_index(m)?;
        let s = &self.stages[idx];
        let lo = s.threshold.max(2.0);
        let hi = 2.0 * s.measure.k() as f64;
        let mut best = 0.0f64;
        for t in log_spaced(lo, hi, 400) {
            let v = self.tail(t)?.norm() / (t.ln() / t).powf(1.0 / self.alpha);
            best = best.max(v);
        }
        Ok(best)
    }

    /// `(t/ln t) |tail(t)|^alpha` at the geometric midpoints between
    /// consecutive peaks; these collapse between stages, which is what
    /// separates the peak scale from every intermediate scale.
    pub fn midpoint_ratios(&self) -> Result<Vec<(f64, f64)>, StageError> {
        let mut out = Vec::new();
        for pair in self.stages.windows(2) {
            let t = ((pair[0].measure.k() as f64) * (pair[1].measure.k() as f64)).sqrt();
            out.push((t, t / t.ln() * self.tail(t)?.norm().powf(self.alpha)));
        }
        Ok(out)
    }
}
