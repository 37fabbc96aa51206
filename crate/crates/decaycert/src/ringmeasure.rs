//! Atomic measures on a ring of k-th roots of unity, shrunk by a factor
//! `1/A` and planted at `w = -1 + iH`: the sharpness witnesses whose
//! Cauchy, Laplace, and integrated-Laplace transforms admit closed forms.
//!
//! Everything numerically delicate runs in [`LogComplex`]: weights reach
//! `A^(k-1)` while transform values sit below `e^(-t)`, so cartesian f64
//! would overflow long before the interesting regime. Brute atom sums
//! lose roughly `k*log10(A|z-w|)` digits to cancellation and serve only
//! as small-k oracles; production paths use the closed forms and the
//! m-series.

use crate::logcomplex::{ln_factorial, LogComplex};
use crate::omega::{golden_min, log_spaced, OmegaRegion};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, TAU};
use thiserror::Error;

fn fmt_min_h(min_h: &Option<f64>) -> String {
    match min_h {
        Some(h) => format!("; smallest workable H is about {h:.3}"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("k = round(psi H^alpha log H) = {k} at H = {h} is below 2{}", fmt_min_h(.min_h))]
    KTooSmall { k: u64, h: f64, min_h: Option<f64> },
    #[error(
        "interior constraint sqrt(k) exp(k/H^alpha) <= H^beta fails at H = {h}: \
         log10 lhs = {lhs_log10:.4} > log10 rhs = {rhs_log10:.4}{}",
        fmt_min_h(.min_h)
    )]
    ConstraintOne { h: f64, lhs_log10: f64, rhs_log10: f64, min_h: Option<f64> },
    #[error("{z} coincides with an atom")]
    AtomCollision { z: Complex64 },
    #[error("{z} is too close to a pole of the closed form")]
    NearPole { z: Complex64 },
    #[error("{x} is a {k}-th root of unity")]
    RootOfUnity { k: u64, x: Complex64 },
    #[error("series truncation is only controlled for t <= A = {a:.3}, got t = {t}")]
    SeriesDiverges { t: f64, a: f64 },
    #[error("time must be nonnegative, got {t}")]
    NegativeTime { t: f64 },
}

/// One atom: a location just off `w` and a huge balanced weight.
#[derive(Debug, Clone, Copy)]
pub struct Atom {
    pub location: Complex64,
    pub weight: LogComplex,
}

/// A brute-force transform sum together with the largest single term,
/// which callers need to budget the cancellation noise floor.
#[derive(Debug, Clone, Copy)]
pub struct BruteSum {
    pub value: LogComplex,
    pub peak_term_log_mag: f64,
}

/// Both sides of the two root-of-unity identities behind the closed forms:
/// `sum_s q^s/(x-q^s) = k/(x^k-1)` and `sum_s q^2s/(x-q^s) = kx/(x^k-1)`.
#[derive(Debug, Clone, Copy)]
pub struct RootsIdentityCheck {
    pub lhs1: LogComplex,
    pub rhs1: LogComplex,
    pub lhs2: LogComplex,
    pub rhs2: LogComplex,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
pub enum WorstPoint {
    Z { z: [f64; 2] },
    T { t: f64 },
}

/// Empirical record for one of the bounds X1/X3/X4/X5/X6: the smallest B
/// making the bound hold on the grid, plus whether the epsilon floor held
/// on the indicator-inactive points.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub bound_id: &'static str,
    #[serde(rename = "B_empirical")]
    pub b_empirical: f64,
    pub worst_point: WorstPoint,
    pub grid: String,
    pub inactive_ok: bool,
    pub pass: bool,
}

/// The two addends of the `X_alpha` norm estimate: `sup_t |L mu|` plus the
/// weighted Cauchy sup over the region.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpaceNorm {
    pub sup_time: f64,
    pub sup_cauchy_weighted: f64,
    pub total: f64,
}

/// `k` atoms at `w + q^s/A` with weights `tau q^s (1 + q^s/(A w))`, where
/// `q = e^(2 pi i/k)`, `A = 2k log k`, `tau = A^(k-1)/sqrt(k)`, and
/// `w = -1 + iH`. `k` itself is `round(psi H^alpha log H)`.
#[derive(Debug, Clone)]
pub struct RingMeasure {
    alpha: f64,
    beta: f64,
    psi: f64,
    h: f64,
    q_threshold: f64,
    eps: f64,
    k: u64,
    a: f64,
    tau: LogComplex,
    w: Complex64,
    bracket_ok: bool,
    atoms: Vec<Atom>,
}

/// Approximately the smallest `H` at which `build` succeeds for these shape
/// parameters: the rounded `k` reaches 2 and the interior constraint
/// `sqrt(k) e^(k/H^alpha) <= H^beta` holds. `None` when the shape
/// parameters are out of range or no `H` below `2^201` works.
pub fn min_feasible_h(alpha: f64, beta: f64, psi: f64) -> Option<f64> {
    if !(alpha > 0.0) || !(beta > 0.5 * alpha) || !(psi > 0.0 && psi < beta - 0.5 * alpha) {
        return None;
    }
    let ok = |h: f64| {
        let k = (psi * h.powf(alpha) * h.ln()).round();
        k >= 2.0 && 0.5 * k.ln() + k / h.powf(alpha) <= beta * h.ln()
    };
    let mut hi = 2.0;
    let mut doublings = 0;
    while !ok(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return None;
        }
    }
    let mut lo = (0.5 * hi).max(1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Brute-sum both root-of-unity identities at `x`, in log domain so huge
/// `|x|` stays representable. Exact collisions with a root, and `x^k`
/// landing exactly on 1, are rejected.
pub fn roots_identity_check(k: u64, x: Complex64) -> Result<RootsIdentityCheck, MeasureError> {
    if k < 1 {
        return Err(MeasureError::InvalidParameter("k must be at least 1".into()));
    }
    let k_f = k as f64;
    let mut first = Vec::with_capacity(k as usize);
    let mut second = Vec::with_capacity(k as usize);
    for s in 1..=k {
        let q = LogComplex::new(0.0, TAU * s as f64 / k_f);
        let qc = q.to_cartesian().expect("unit modulus is in range");
        let d = x - qc;
        if d.re == 0.0 && d.im == 0.0 {
            return Err(MeasureError::RootOfUnity { k, x });
        }
        let d = LogComplex::from_cartesian(d);
        first.push(q.div(d));
        second.push(q.mul(q).div(d));
    }
    let x_lc = LogComplex::from_cartesian(x);
    let power = x_lc.pow_int(k as i64);
    let denom = power - LogComplex::one();
    // Relative proximity, not exact zero: phases like arg(i^4) carry
    // sin(pi)-sized dust that survives the subtraction.
    if denom.log_mag() - power.log_mag().max(0.0) < (1e-12f64).ln() {
        return Err(MeasureError::RootOfUnity { k, x });
    }
    let k_lc = LogComplex::from_real(k_f);
    Ok(RootsIdentityCheck {
        lhs1: LogComplex::sum(first),
        rhs1: k_lc.div(denom),
        lhs2: LogComplex::sum(second),
        rhs2: k_lc.mul(x_lc).div(denom),
    })
}

impl RingMeasure {
    pub fn build(
        alpha: f64,
        beta: f64,
        h: f64,
        psi: f64,
        q_threshold: f64,
        eps: f64,
    ) -> Result<Self, MeasureError> {
        let bad = |msg: String| Err(MeasureError::InvalidParameter(msg));
        if !(alpha > 0.0) || !alpha.is_finite() {
            return bad(format!("alpha must be positive and finite, got {alpha}"));
        }
        if !(beta > 0.5 * alpha) || !beta.is_finite() {
            return bad(format!("beta must exceed alpha/2, got beta = {beta}, alpha = {alpha}"));
        }
        if !(psi > 0.0 && psi < beta - 0.5 * alpha) {
            return bad(format!("psi must lie in (0, beta - alpha/2), got {psi}"));
        }
        if !(h > 1.0) || !h.is_finite() {
            return bad(format!("H must exceed 1, got {h}"));
        }
        if !(q_threshold >= 0.0) || !q_threshold.is_finite() {
            return bad(format!("Q must be nonnegative, got {q_threshold}"));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return bad(format!("eps must be positive, got {eps}"));
        }
        let k_real = (psi * h.powf(alpha) * h.ln()).round();
        if !(k_real >= 2.0) {
            return Err(MeasureError::KTooSmall {
                k: k_real.max(0.0) as u64,
                h,
                min_h: min_feasible_h(alpha, beta, psi),
            });
        }
        let k = k_real as u64;
        let lhs_log = 0.5 * k_real.ln() + k_real / h.powf(alpha);
        let rhs_log = beta * h.ln();
        if lhs_log > rhs_log {
            return Err(MeasureError::ConstraintOne {
                h,
                lhs_log10: lhs_log / std::f64::consts::LN_10,
                rhs_log10: rhs_log / std::f64::consts::LN_10,
                min_h: min_feasible_h(alpha, beta, psi),
            });
        }
        let bracket_ok = h.powf(alpha) <= k_real && k_real <= h.powf(1.5 * alpha);
        let a = 2.0 * k_real * k_real.ln();
        let tau = LogComplex::new((k_real - 1.0) * a.ln() - 0.5 * k_real.ln(), 0.0);
        let w = Complex64::new(-1.0, h);
        let region = OmegaRegion::new(alpha, 1.0).expect("alpha validated above");
        let mut atoms = Vec::with_capacity(k as usize);
        for s in 1..=k {
            let q = LogComplex::new(0.0, TAU * s as f64 / k_real);
            let qc = q.to_cartesian().expect("unit modulus is in range");
            let location = w + qc / a;
            if region.contains(location) {
                return bad(format!("atom {s} at {location} lands inside the region"));
            }
            let weight = tau
                .mul(q)
                .mul(LogComplex::from_cartesian(Complex64::new(1.0, 0.0) + qc / (a * w)));
            atoms.push(Atom { location, weight });
        }
        Ok(Self { alpha, beta, psi, h, q_threshold, eps, k, a, tau, w, bracket_ok, atoms })
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

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn q_threshold(&self) -> f64 {
        self.q_threshold
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn tau(&self) -> LogComplex {
        self.tau
    }

    pub fn w(&self) -> Complex64 {
        self.w
    }

    /// Whether `H^alpha <= k <= H^(3 alpha/2)` held. Recorded, not
    /// enforced: small-H ladders legitimately run below the lower edge.
    pub fn bracket_ok(&self) -> bool {
        self.bracket_ok
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn region(&self) -> OmegaRegion {
        OmegaRegion::new(self.alpha, 1.0).expect("alpha validated at build")
    }

    /// Total mass; cancels to zero for k >= 3, `2 tau/(A w)` for k = 2.
    pub fn mass(&self) -> LogComplex {
        LogComplex::sum(self.atoms.iter().map(|a| a.weight))
    }

    /// Closed-form Cauchy transform `(z/w) k A tau / (A^k (z-w)^k - 1)`.
    pub fn cauchy_closed(&self, z: Complex64) -> Result<LogComplex, MeasureError> {
        let k_f = self.k as f64;
        let big = LogComplex::from_cartesian(z - self.w)
            .pow_int(self.k as i64)
            .mul(LogComplex::new(k_f * self.a.ln(), 0.0));
        let denom = big - LogComplex::one();
        if denom.log_mag() - big.log_mag().max(0.0) < (1e-12f64).ln() {
            return Err(MeasureError::NearPole { z });
        }
        Ok(LogComplex::from_cartesian(z)
            .mul(LogComplex::new((k_f * self.a).ln(), 0.0))
            .mul(self.tau)
            .div(LogComplex::from_cartesian(self.w))
            .div(denom))
    }

    /// Atom-by-atom Cauchy sum. Oracle only: cancellation erases about
    /// `k log10(A|z-w|)` digits.
    pub fn cauchy_brute_sum(&self, z: Complex64) -> Result<BruteSum, MeasureError> {
        let mut terms = Vec::with_capacity(self.atoms.len());
        let mut peak = f64::NEG_INFINITY;
        for atom in &self.atoms {
            let d = z - atom.location;
            if d.re == 0.0 && d.im == 0.0 {
                return Err(MeasureError::AtomCollision { z });
            }
            let term = atom.weight.div(LogComplex::from_cartesian(d));
            peak = peak.max(term.log_mag());
            terms.push(term);
        }
        Ok(BruteSum { value: LogComplex::sum(terms), peak_term_log_mag: peak })
    }

    pub fn cauchy_brute(&self, z: Complex64) -> Result<LogComplex, MeasureError> {
        Ok(self.cauchy_brute_sum(z)?.value)
    }

    /// Laplace transform by the m-series
    /// `tau e^(tw) k (t/A)^(k-1)/(k-1)! * sum_m r_m (1 + (km-1)/(tw))`,
    /// `r_m = (t/A)^((m-1)k) (k-1)!/(km-1)!`. Terms decrease monotonically
    /// for t <= A; truncation at relative 1e-18.
    pub fn laplace_series(&self, t: f64) -> Result<LogComplex, MeasureError> {
        if !(t >= 0.0) {
            return Err(MeasureError::NegativeTime { t });
        }
        if t > self.a {
            return Err(MeasureError::SeriesDiverges { t, a: self.a });
        }
        if t == 0.0 {
            if self.k == 2 {
                return Ok(self
                    .tau
                    .mul(LogComplex::from_real(2.0 / self.a))
                    .div(LogComplex::from_cartesian(self.w)));
            }
            return Ok(LogComplex::zero());
        }
        let k_f = self.k as f64;
        let log_ratio = t.ln() - self.a.ln();
        let pref = self
            .tau
            .mul(LogComplex::exp_c(self.w * t))
            .mul(LogComplex::new(
                k_f.ln() + (k_f - 1.0) * log_ratio - ln_factorial(self.k - 1),
                0.0,
            ));
        let tw = self.w * t;
        let mut terms = Vec::new();
        for m in 1..=500u64 {
            let km1 = m * self.k - 1;
            let base = (m as f64 - 1.0) * k_f * log_ratio + ln_factorial(self.k - 1)
                - ln_factorial(km1);
            let factor = LogComplex::from_cartesian(
                Complex64::new(1.0, 0.0) + Complex64::new(km1 as f64, 0.0) / tw,
            );
            let term = LogComplex::new(base, 0.0).mul(factor);
            terms.push(term);
            if term.log_mag() < terms[0].log_mag() + (1e-18f64).ln() {
                break;
            }
        }
        Ok(pref.mul(LogComplex::sum(terms)))
    }

    /// Exact atom sum `sum_s weight_s e^(t loc_s)`, full phase included.
    pub fn laplace_brute_sum(&self, t: f64) -> Result<BruteSum, MeasureError> {
        if !(t >= 0.0) {
            return Err(MeasureError::NegativeTime { t });
        }
        let mut terms = Vec::with_capacity(self.atoms.len());
        let mut peak = f64::NEG_INFINITY;
        for atom in &self.atoms {
            let term = atom.weight.mul(LogComplex::exp_c(atom.location * t));
            peak = peak.max(term.log_mag());
            terms.push(term);
        }
        Ok(BruteSum { value: LogComplex::sum(terms), peak_term_log_mag: peak })
    }

    pub fn laplace_brute(&self, t: f64) -> Result<LogComplex, MeasureError> {
        Ok(self.laplace_brute_sum(t)?.value)
    }

    /// Production Laplace evaluation: series for t <= A, brute beyond
    /// (there the s = k term dominates and cancellation is mild).
    pub fn laplace(&self, t: f64) -> Result<LogComplex, MeasureError> {
        if t <= self.a {
            self.laplace_series(t)
        } else {
            Ok(self.laplace_brute_sum(t)?.value)
        }
    }

    /// `integral of L mu over [0, t]`, which collapses to
    /// `(tau e^(tw)/w) sum_s q^s e^(t q^s/A)` because the weights satisfy
    /// `weight_s/loc_s = tau q^s/w` and those prefactors sum to zero.
    pub fn laplace_integral(&self, t: f64) -> Result<LogComplex, MeasureError> {
        if !(t >= 0.0) {
            return Err(MeasureError::NegativeTime { t });
        }
        if t > self.a {
            return Ok(self.laplace_integral_brute_sum(t)?.value);
        }
        if t == 0.0 {
            return Ok(LogComplex::zero());
        }
        let k_f = self.k as f64;
        let log_ratio = t.ln() - self.a.ln();
        let pref = self
            .tau
            .mul(LogComplex::exp_c(self.w * t))
            .div(LogComplex::from_cartesian(self.w))
            .mul(LogComplex::new(
                k_f.ln() + (k_f - 1.0) * log_ratio - ln_factorial(self.k - 1),
                0.0,
            ));
        let mut terms = Vec::new();
        for m in 1..=500u64 {
            let base = (m as f64 - 1.0) * k_f * log_ratio + ln_factorial(self.k - 1)
                - ln_factorial(m * self.k - 1);
            terms.push(LogComplex::new(base, 0.0));
            if base < terms[0].log_mag() + (1e-18f64).ln() {
                break;
            }
        }
        Ok(pref.mul(LogComplex::sum(terms)))
    }

    pub fn laplace_integral_brute_sum(&self, t: f64) -> Result<BruteSum, MeasureError> {
        if !(t >= 0.0) {
            return Err(MeasureError::NegativeTime { t });
        }
        let k_f = self.k as f64;
        let pref = self
            .tau
            .mul(LogComplex::exp_c(self.w * t))
            .div(LogComplex::from_cartesian(self.w));
        let mut terms = Vec::with_capacity(self.atoms.len());
        let mut peak = f64::NEG_INFINITY;
        for s in 1..=self.k {
            let q = LogComplex::new(0.0, TAU * s as f64 / k_f);
            let qc = q.to_cartesian().expect("unit modulus is in range");
            let term = q.mul(LogComplex::exp_c(qc * (t / self.a)));
            peak = peak.max(pref.log_mag() + term.log_mag());
            terms.push(term);
        }
        Ok(BruteSum { value: pref.mul(LogComplex::sum(terms)), peak_term_log_mag: peak })
    }

    pub fn laplace_integral_brute(&self, t: f64) -> Result<LogComplex, MeasureError> {
        Ok(self.laplace_integral_brute_sum(t)?.value)
    }

    /// `|N mu(k)|`: the orbit lower-bound scalar of the sharpness chain.
    pub fn orbit_lower_bound(&self) -> Result<f64, MeasureError> {
        Ok(self.laplace_integral(self.k as f64)?.log_mag().exp())
    }

    fn time_grid(&self, density: usize) -> Vec<f64> {
        let mut ts = vec![0.0];
        ts.extend(log_spaced(1e-3, 10.0 * self.a, 600 * density));
        ts.push(self.k as f64);
        ts
    }

    /// Region grid for X1: boundary pushed just inside, a dense band
    /// around the atom heights, and interior rays, out to
    /// `|z| = 100 max(Q, H^2)`.
    fn cauchy_grid(&self) -> (Vec<Complex64>, String) {
        let region = self.region();
        let r_max = 100.0 * self.q_threshold.max(self.h * self.h);
        let mut heights = vec![0.0];
        heights.extend(log_spaced(1e-3, r_max, 240));
        heights.extend(log_spaced(0.5 * self.h, 2.0 * self.h, 160));
        // |C mu| ~ |z - w|^-k spikes where the boundary passes the ring,
        // with height half-width ~ dist/sqrt(k) — far below the band
        // spacing once k is large, so the peak gets its own linear window.
        let (y_peak, d_peak) = golden_min(
            |y| (region.boundary_point(y) - self.w).norm(),
            0.5 * self.h,
            2.0 * self.h,
            1e-12 * self.h,
        );
        let span = 8.0 * d_peak / (self.k as f64).sqrt();
        let lo = (y_peak - span).max(1e-3);
        let hi = y_peak + span;
        heights.extend((0..=320).map(|i| lo + (hi - lo) * i as f64 / 320.0));
        let mut zs = Vec::new();
        for &y in &heights {
            for sign in [1.0, -1.0] {
                if y == 0.0 && sign < 0.0 {
                    continue;
                }
                let yy = sign * y;
                zs.push(Complex64::new(region.boundary_re(yy) * (1.0 - 1e-9), yy));
            }
        }
        for theta in [0.0, FRAC_PI_6, -FRAC_PI_6, FRAC_PI_3, -FRAC_PI_3, 1.5208, -1.5208] {
            for &r in &log_spaced(1e-2, r_max, 120) {
                zs.push(Complex64::new(r * theta.cos(), r * theta.sin()));
            }
        }
        zs.retain(|&z| region.contains(z));
        let grid = format!("omega boundary/band/rays, {} points, r_max {:.3e}", zs.len(), r_max);
        (zs, grid)
    }

    fn certify_x1(&self, b_cap: f64) -> Result<BoundCertificate, MeasureError> {
        let (zs, grid) = self.cauchy_grid();
        let logs = zs
            .par_iter()
            .map(|&z| self.cauchy_closed(z).map(|v| v.log_mag()))
            .collect::<Result<Vec<_>, _>>()?;
        let ln_eps = self.eps.ln();
        let mut best = f64::NEG_INFINITY;
        let mut worst = zs[0];
        let mut inactive_ok = true;
        for (&z, &lv) in zs.iter().zip(&logs) {
            if z.norm() > self.q_threshold {
                let req = lv - self.beta * (1.0 + z.im.abs()).ln();
                if req > best {
                    best = req;
                    worst = z;
                }
            } else if lv > ln_eps {
                inactive_ok = false;
            }
        }
        let b = best.exp();
        Ok(BoundCertificate {
            bound_id: "X1",
            b_empirical: b,
            worst_point: WorstPoint::Z { z: [worst.re, worst.im] },
            grid,
            inactive_ok,
            pass: inactive_ok && b.is_finite() && b <= b_cap,
        })
    }

    fn certify_time_bounds(
        &self,
        b_cap: f64,
    ) -> Result<(BoundCertificate, BoundCertificate), MeasureError> {
        let ts = self.time_grid(1);
        let logs = ts
            .par_iter()
            .map(|&t| -> Result<(f64, f64), MeasureError> {
                Ok((self.laplace(t)?.log_mag(), self.laplace_integral(t)?.log_mag()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let grid = format!("t: 0, geom(1e-3, {:.3e}; 600), k", 10.0 * self.a);
        let ln_eps = self.eps.ln();
        let two_k = 2.0 * self.k as f64;
        let mut l_best = f64::NEG_INFINITY;
        let mut l_worst = 0.0;
        let mut l_inactive_ok = true;
        let mut n_best = f64::NEG_INFINITY;
        let mut n_worst = 0.0;
        let mut n_inactive_ok = true;
        for (&t, &(l_log, n_log)) in ts.iter().zip(&logs) {
            if t > self.q_threshold {
                if l_log > l_best {
                    l_best = l_log;
                    l_worst = t;
                }
            } else if l_log > ln_eps {
                l_inactive_ok = false;
            }
            // The (log t)/t envelope needs t > 1; a threshold below 1
            // leaves (Q, 1] outside both windows.
            if t > self.q_threshold.max(1.0) && t < two_k {
                let req = self.alpha * n_log + t.ln() - t.ln().ln();
                if req > n_best {
                    n_best = req;
                    n_worst = t;
                }
            } else if (t <= self.q_threshold || t >= two_k) && self.alpha * n_log > ln_eps - (t + 1.0).ln() {
                n_inactive_ok = false;
            }
        }
        let l_b = l_best.exp();
        let n_b = n_best.exp();
        Ok((
            BoundCertificate {
                bound_id: "X3",
                b_empirical: l_b,
                worst_point: WorstPoint::T { t: l_worst },
                grid: grid.clone(),
                inactive_ok: l_inactive_ok,
                pass: l_inactive_ok && l_b.is_finite() && l_b <= b_cap,
            },
            BoundCertificate {
                bound_id: "X5",
                b_empirical: n_b,
                worst_point: WorstPoint::T { t: n_worst },
                grid,
                inactive_ok: n_inactive_ok,
                pass: n_inactive_ok && n_b.is_finite() && n_b <= b_cap,
            },
        ))
    }

    /// Certificates for X1/X3/X4/X5/X6 at cap `b_cap`, grids built to the
    /// standard coverage. B is the active-point supremum alone; the
    /// epsilon easing applies only as the floor on inactive points.
    pub fn certify_bounds(&self, b_cap: f64) -> Result<Vec<BoundCertificate>, MeasureError> {
        if !(b_cap > 0.0) || !b_cap.is_finite() {
            return Err(MeasureError::InvalidParameter(format!(
                "B cap must be positive and finite, got {b_cap}"
            )));
        }
        let k_f = self.k as f64;
        let x1 = self.certify_x1(b_cap)?;
        let (x3, x5) = self.certify_time_bounds(b_cap)?;
        let l_k = self.laplace(k_f)?;
        let x4_b = l_k.log_mag().abs().exp();
        let x4 = BoundCertificate {
            bound_id: "X4",
            b_empirical: x4_b,
            worst_point: WorstPoint::T { t: k_f },
            grid: "t = k".into(),
            inactive_ok: true,
            pass: x4_b.is_finite() && x4_b <= b_cap,
        };
        let n_k = self.laplace_integral(k_f)?;
        let x6_b = (k_f.ln().ln() - k_f.ln() - self.alpha * n_k.log_mag()).exp();
        let x6 = BoundCertificate {
            bound_id: "X6",
            b_empirical: x6_b,
            worst_point: WorstPoint::T { t: k_f },
            grid: "t = k".into(),
            inactive_ok: true,
            pass: x6_b.is_finite() && x6_b <= b_cap,
        };
        Ok(vec![x1, x3, x4, x5, x6])
    }

    /// The norm estimate `sup_t |L mu(t)| + sup_z |C mu(z)| (1+|Im z|)^-alpha`
    /// over the standard grids.
    pub fn space_norm(&self) -> Result<SpaceNorm, MeasureError> {
        self.space_norm_scaled(1)
    }

    /// Same with all grid counts multiplied by `density`, for refinement
    /// stability checks.
    pub fn space_norm_scaled(&self, density: usize) -> Result<SpaceNorm, MeasureError> {
        if density == 0 {
            return Err(MeasureError::InvalidParameter("density must be at least 1".into()));
        }
        let ts = self.time_grid(density);
        let sup_time = ts
            .par_iter()
            .map(|&t| self.laplace(t).map(|v| v.log_mag()))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
            .exp();
        let region = self.region();
        let mut heights = vec![0.0];
        heights.extend(log_spaced(1e-3, 1e3 * self.h, 320 * density));
        heights.extend(log_spaced(0.5 * self.h, 2.0 * self.h, 240 * density));
        let mut zs = Vec::new();
        for &y in &heights {
            for sign in [1.0, -1.0] {
                if y == 0.0 && sign < 0.0 {
                    continue;
                }
                let yy = sign * y;
                let bnd = region.boundary_re(yy);
                for re in [bnd * (1.0 - 1e-9), 0.5 * bnd, 0.0, 0.5, 0.99] {
                    zs.push(Complex64::new(re, yy));
                }
            }
        }
        let sup_cauchy_weighted = zs
            .par_iter()
            .map(|&z| {
                self.cauchy_closed(z)
                    .map(|v| v.log_mag() - self.alpha * (1.0 + z.im.abs()).ln())
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
            .exp();
        Ok(SpaceNorm { sup_time, sup_cauchy_weighted, total: sup_time + sup_cauchy_weighted })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nine_atom() -> RingMeasure {
        RingMeasure::build(1.0, 1.0, 10.0, 0.4, 1.0, 0.5).unwrap()
    }

    fn two_atom() -> RingMeasure {
        RingMeasure::build(1.0, 0.75, 5.0, 0.2, 1.0, 0.5).unwrap()
    }

    fn five_atom() -> RingMeasure {
        RingMeasure::build(1.0, 1.0, 6.5, 0.4, 1.0, 0.5).unwrap()
    }

    /// |a - b| / |b| computed in log domain.
    fn rel(a: LogComplex, b: LogComplex) -> f64 {
        ((a - b).log_mag() - b.log_mag()).exp()
    }

    #[test]
    fn build_matches_hand_parameters() {
        let m = nine_atom();
        assert_eq!(m.k(), 9);
        let a_want = 18.0 * 9f64.ln();
        assert!((m.a() - a_want).abs() <= 1e-12 * a_want);
        assert!((m.a() - 39.550).abs() <= 1e-2);
        let tau_want = 8.0 * m.a().ln() - 0.5 * 9f64.ln();
        assert!((m.tau().log_mag() - tau_want).abs() <= 1e-12 * tau_want);
        assert_eq!(m.tau().phase(), 0.0);
        assert_eq!(m.w(), Complex64::new(-1.0, 10.0));
        assert_eq!(m.atoms().len(), 9);
        // k = 9 < H^alpha = 10: below the proof's bracket, recorded only.
        assert!(!m.bracket_ok());
        let big = RingMeasure::build(2.0, 2.0, 10.0, 0.8, 1.0, 0.5).unwrap();
        assert_eq!(big.k(), 184);
        assert!(big.bracket_ok());
    }

    #[test]
    fn atoms_sit_on_the_shrunk_ring() {
        let m = nine_atom();
        for atom in m.atoms() {
            let r = (atom.location - m.w()).norm();
            assert!((r - 1.0 / m.a()).abs() <= 1e-15);
        }
    }

    #[test]
    fn mass_cancels_for_three_or_more_atoms() {
        let m = nine_atom();
        let rel_mass = (m.mass().log_mag() - m.tau().log_mag()).exp();
        assert!(rel_mass <= 1e-12, "rel mass {rel_mass}");
    }

    #[test]
    fn two_atom_mass_is_the_residual_pair() {
        let m = two_atom();
        assert_eq!(m.k(), 2);
        let want = m
            .tau()
            .mul(LogComplex::from_real(2.0 / m.a()))
            .div(LogComplex::from_cartesian(m.w()));
        let got = m.mass();
        assert!(rel(got, want) <= 1e-12, "rel = {}", rel(got, want));
    }

    #[test]
    fn too_small_h_reports_k_and_a_suggestion() {
        let err = RingMeasure::build(1.0, 1.0, 2.0, 0.4, 1.0, 0.5).unwrap_err();
        match err {
            MeasureError::KTooSmall { k, min_h, .. } => {
                assert_eq!(k, 1);
                let min_h = min_h.expect("feasible region exists");
                assert!(min_h > 3.0 && min_h < 3.5, "min_h = {min_h}");
                assert!(RingMeasure::build(1.0, 1.0, min_h + 0.05, 0.4, 1.0, 0.5).is_ok());
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn interior_constraint_can_fail_on_its_own() {
        // k = round(0.499 * 11 * ln 11) = 13: sqrt(13) e^(13/11) > 11.
        let err = RingMeasure::build(1.0, 1.0, 11.0, 0.499, 1.0, 0.5).unwrap_err();
        assert!(matches!(err, MeasureError::ConstraintOne { .. }), "got {err}");
        // One notch down in H the same shape parameters pass.
        assert!(RingMeasure::build(1.0, 1.0, 10.0, 0.499, 1.0, 0.5).is_ok());
    }

    #[test]
    fn shape_parameters_rejected() {
        assert!(RingMeasure::build(0.0, 1.0, 10.0, 0.4, 1.0, 0.5).is_err());
        assert!(RingMeasure::build(1.0, 0.5, 10.0, 0.4, 1.0, 0.5).is_err());
        assert!(RingMeasure::build(1.0, 1.0, 10.0, 0.6, 1.0, 0.5).is_err());
        assert!(RingMeasure::build(1.0, 1.0, 1.0, 0.4, 1.0, 0.5).is_err());
        assert!(RingMeasure::build(1.0, 1.0, 10.0, 0.4, -1.0, 0.5).is_err());
        assert!(RingMeasure::build(1.0, 1.0, 10.0, 0.4, 1.0, 0.0).is_err());
    }

    #[test]
    fn roots_identities_two_atom_hand_values() {
        let c = roots_identity_check(2, Complex64::new(2.0, 0.0)).unwrap();
        let lhs1 = c.lhs1.to_cartesian().unwrap();
        let rhs2 = c.rhs2.to_cartesian().unwrap();
        assert!((lhs1.re - 2.0 / 3.0).abs() <= 1e-14 && lhs1.im.abs() <= 1e-15);
        assert!((rhs2.re - 4.0 / 3.0).abs() <= 1e-14 && rhs2.im.abs() <= 1e-15);
        assert!(rel(c.lhs1, c.rhs1) <= 1e-14);
        assert!(rel(c.lhs2, c.rhs2) <= 1e-14);
    }

    #[test]
    fn roots_identities_seven_atoms() {
        let c = roots_identity_check(7, Complex64::new(0.0, 0.5)).unwrap();
        assert!(rel(c.lhs1, c.rhs1) <= 1e-10);
        assert!(rel(c.lhs2, c.rhs2) <= 1e-10);
    }

    #[test]
    fn roots_closed_forms_leading_terms() {
        // rhs1 x^k -> k and rhs2 x^(k-1) -> k as |x| grows.
        let x = Complex64::from_polar(1e8, 0.3);
        let c = roots_identity_check(5, x).unwrap();
        let x_lc = LogComplex::from_cartesian(x);
        let k = LogComplex::from_real(5.0);
        assert!(rel(c.rhs1.mul(x_lc.pow_int(5)), k) <= 1e-12);
        assert!(rel(c.rhs2.mul(x_lc.pow_int(4)), k) <= 1e-12);
    }

    #[test]
    fn roots_of_unity_rejected() {
        assert!(matches!(
            roots_identity_check(6, Complex64::new(1.0, 0.0)),
            Err(MeasureError::RootOfUnity { .. })
        ));
        // i is a 4th root: the x^k - 1 denominator cancels exactly even
        // though the sampled roots never collide bit-for-bit with x.
        assert!(matches!(
            roots_identity_check(4, Complex64::new(0.0, 1.0)),
            Err(MeasureError::RootOfUnity { .. })
        ));
    }

    #[test]
    fn cauchy_vanishes_at_origin_and_decays_at_the_far_boundary() {
        let m = nine_atom();
        assert!(m.cauchy_closed(Complex64::new(0.0, 0.0)).unwrap().is_zero());
        let region = OmegaRegion::new(1.0, 1.0).unwrap();
        let z_at = |y: f64| Complex64::new(region.boundary_re(y) * (1.0 - 1e-9), y);
        let c1 = m.cauchy_closed(z_at(1e3)).unwrap().log_mag();
        let c2 = m.cauchy_closed(z_at(2e3)).unwrap().log_mag();
        assert!(c1 <= m.eps().ln());
        // |C mu| ~ |z|^(1-k) along the boundary.
        let want = (1.0 - 9.0) * 2f64.ln();
        assert!(((c2 - c1) / want - 1.0).abs() <= 0.05, "slope {}", (c2 - c1) / want);
    }

    #[test]
    fn cauchy_closed_matches_brute_for_two_atoms() {
        let m = two_atom();
        let region = OmegaRegion::new(1.0, 1.0).unwrap();
        for z in [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 3.0),
            Complex64::new(region.boundary_re(2.0) * (1.0 - 1e-9), 2.0),
            Complex64::new(0.5, -5.0),
        ] {
            assert!(region.contains(z));
            let closed = m.cauchy_closed(z).unwrap();
            let brute = m.cauchy_brute(z).unwrap();
            assert!(rel(closed, brute) <= 1e-12, "z = {z}");
        }
    }

    #[test]
    fn cauchy_closed_matches_brute_in_the_five_atom_shell() {
        // Shell radii keep the brute's cancellation under ~6 digits.
        let m = five_atom();
        let region = OmegaRegion::new(1.0, 1.0).unwrap();
        let mut checked = 0;
        for &r in &[0.95, 1.2, 1.5, 2.0] {
            for j in 0..9 {
                let theta = -0.45 + 0.1125 * j as f64;
                let z = m.w() + Complex64::from_polar(r, theta);
                if !region.contains(z) {
                    continue;
                }
                let closed = m.cauchy_closed(z).unwrap();
                let brute = m.cauchy_brute(z).unwrap();
                assert!(rel(closed, brute) <= 1e-8, "z = {z}, rel = {}", rel(closed, brute));
                checked += 1;
            }
        }
        assert!(checked >= 12, "only {checked} shell points landed inside the region");
    }

    #[test]
    fn cauchy_brute_rejects_atom_collision() {
        let m = nine_atom();
        let z = m.atoms()[4].location;
        assert!(matches!(m.cauchy_brute(z), Err(MeasureError::AtomCollision { .. })));
    }

    #[test]
    fn cauchy_near_pole_guard_fires_on_the_ring() {
        let m = nine_atom();
        // Just off an atom the closed-form denominator loses 12+ digits.
        let z = m.atoms()[0].location + Complex64::new(1e-16, 0.0);
        assert!(matches!(m.cauchy_closed(z), Err(MeasureError::NearPole { .. })));
    }

    #[test]
    fn laplace_at_the_anchor_time_is_order_one() {
        let m = nine_atom();
        let v = m.laplace(9.0).unwrap().log_mag().exp();
        assert!(v >= 0.3 && v <= 0.5, "|L mu(k)| = {v}");
    }

    #[test]
    fn laplace_series_matches_brute_for_five_atoms() {
        let m = five_atom();
        for &(t, tol) in &[(0.5, 1e-6), (3.0, 1e-10), (9.0, 1e-10), (14.5, 1e-10)] {
            let series = m.laplace_series(t).unwrap();
            let brute = m.laplace_brute(t).unwrap();
            assert!(rel(series, brute) <= tol, "t = {t}, rel = {}", rel(series, brute));
        }
        // At t = A the two regimes meet.
        let series = m.laplace_series(m.a()).unwrap();
        let brute = m.laplace_brute(m.a()).unwrap();
        assert!(rel(series, brute) <= 1e-9);
    }

    #[test]
    fn laplace_integral_series_matches_brute_for_five_atoms() {
        let m = five_atom();
        for &t in &[3.0, 9.0, 14.5, m.a()] {
            let series = m.laplace_integral(t).unwrap();
            let brute = m.laplace_integral_brute(t).unwrap();
            assert!(rel(series, brute) <= 1e-9, "t = {t}");
        }
    }

    #[test]
    fn transforms_at_time_zero() {
        let nine = nine_atom();
        assert!(nine.laplace(0.0).unwrap().is_zero());
        assert!(nine.laplace_integral(0.0).unwrap().is_zero());
        assert!(nine.cauchy_closed(Complex64::new(0.0, 0.0)).unwrap().is_zero());
        let two = two_atom();
        // k = 2 keeps a residual pair: L mu(0) = mass = 2 tau/(A w).
        assert!(rel(two.laplace(0.0).unwrap(), two.mass()) <= 1e-12);
        assert!(two.laplace_integral(0.0).unwrap().is_zero());
    }

    #[test]
    fn negative_and_oversized_times_rejected() {
        let m = nine_atom();
        assert!(matches!(m.laplace(-1.0), Err(MeasureError::NegativeTime { .. })));
        assert!(matches!(
            m.laplace_series(m.a() + 1.0),
            Err(MeasureError::SeriesDiverges { .. })
        ));
        // The production entry point switches to the brute sum instead.
        assert!(m.laplace(m.a() + 1.0).is_ok());
    }

    #[test]
    fn integral_derivative_recovers_laplace() {
        let m = RingMeasure::build(1.0, 1.0, 10.0, 0.25, 1.0, 0.5).unwrap();
        assert_eq!(m.k(), 6);
        let t = 3.0;
        let h = 1e-5 * t;
        let n0 = m.laplace_integral(t).unwrap().to_cartesian().unwrap();
        let n1 = m.laplace_integral(t + h).unwrap().to_cartesian().unwrap();
        let diff = (n1 - n0) / h;
        let l = m.laplace(t).unwrap().to_cartesian().unwrap();
        assert!((diff - l).norm() <= 1e-3 * l.norm(), "diff = {diff}, l = {l}");
    }

    #[test]
    fn integral_tracks_laplace_over_w_at_the_anchor() {
        let m = nine_atom();
        let n_k = m.laplace_integral(9.0).unwrap();
        let l_k = m.laplace(9.0).unwrap();
        let ratio = (n_k.log_mag() + m.w().norm().ln() - l_k.log_mag()).exp();
        assert!(ratio >= 0.9 && ratio <= 1.1, "ratio = {ratio}");
        let n_abs = m.orbit_lower_bound().unwrap();
        assert!(n_abs >= 0.03 && n_abs <= 0.05, "|N mu(k)| = {n_abs}");
    }

    #[test]
    fn certificates_pass_at_the_reference_parameters() {
        let m = nine_atom();
        let certs = m.certify_bounds(1e4).unwrap();
        let ids: Vec<_> = certs.iter().map(|c| c.bound_id).collect();
        assert_eq!(ids, ["X1", "X3", "X4", "X5", "X6"]);
        for c in &certs {
            assert!(c.pass, "{} failed: B = {}", c.bound_id, c.b_empirical);
            assert!(c.inactive_ok, "{} broke the epsilon floor", c.bound_id);
            assert!(c.b_empirical > 0.0 && c.b_empirical < 100.0, "{}: B = {}", c.bound_id, c.b_empirical);
        }
        assert!(matches!(certs[0].worst_point, WorstPoint::Z { .. }));
        match certs[1].worst_point {
            WorstPoint::T { t } => assert!(t > 1.0 && t < 40.0, "X3 worst at t = {t}"),
            _ => panic!("X3 worst point must be a time"),
        }
    }

    #[test]
    fn certificates_serialize_deterministically() {
        let m = five_atom();
        let a = serde_json::to_string(&m.certify_bounds(1e4).unwrap()).unwrap();
        let b = serde_json::to_string(&m.certify_bounds(1e4).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"bound_id\":\"X1\""));
        assert!(a.contains("\"B_empirical\""));
    }

    #[test]
    fn space_norm_is_the_sum_of_its_parts_and_grid_stable() {
        let m = nine_atom();
        let n1 = m.space_norm().unwrap();
        assert_eq!(n1.total, n1.sup_time + n1.sup_cauchy_weighted);
        assert!(n1.sup_time >= 0.3, "sup_t |L mu| = {}", n1.sup_time);
        let n2 = m.space_norm_scaled(2).unwrap();
        assert!((n2.total - n1.total).abs() <= 0.02 * n1.total, "{} vs {}", n1.total, n2.total);
    }

    #[test]
    fn normalized_sharpness_constant_is_order_one_tenth() {
        let m = nine_atom();
        let norm = m.space_norm().unwrap().total;
        let envelope = (9f64.ln() / 9.0).powf(1.0);
        let c = m.orbit_lower_bound().unwrap() / (norm * envelope);
        assert!(c >= 0.05 && c <= 0.5, "c = {c}");
    }

    #[test]
    fn min_feasible_h_rejects_bad_shapes() {
        assert!(min_feasible_h(1.0, 0.4, 0.4).is_none());
        assert!(min_feasible_h(1.0, 1.0, 0.7).is_none());
        let h = min_feasible_h(2.0, 2.0, 0.8).unwrap();
        assert!(RingMeasure::build(2.0, 2.0, h + 0.01, 0.8, 1.0, 0.5).is_ok());
    }
}
