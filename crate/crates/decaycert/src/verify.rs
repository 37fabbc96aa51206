//! Quadrature bridges between the transforms: Laplace-transforming the
//! Laplace transform recovers the Cauchy transform, integrating it
//! recovers the integrated transform, and the resolvent line integral
//! recovers the Plancherel closed form. These run the identities through
//! an independent numerical route, so they double as oracles.

use crate::logcomplex::{CompensatedSum, LogComplex, MIN_NORMAL_LOG};
use crate::ringmeasure::{MeasureError, RingMeasure};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Composite Simpson over `[0, t_max]` with compensated accumulation;
/// `n` subintervals, rounded up to even.
pub fn simpson_complex<F: Fn(f64) -> Complex64>(f: F, t_max: f64, n: usize) -> Complex64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = t_max / n as f64;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = f(i as f64 * h);
        re.add(w * v.re);
        im.add(w * v.im);
    }
    Complex64::new(re.value(), im.value()) * (h / 3.0)
}

/// `integral of e^(-z t) L mu(t) dt over [0, t_max]`, which converges to
/// `C mu(z)` for `Re z > 0`. Simpson with `n` subintervals; nodes whose
/// value provably underflows f64 are skipped, which is bit-identical to
/// evaluating them.
pub fn laplace_of_laplace(
    mu: &RingMeasure,
    z: Complex64,
    t_max: f64,
    n: usize,
) -> Result<Complex64, MeasureError> {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = t_max / n as f64;
    // |L mu(t)| <= k max|weight| e^(t(1/A - 1)): a cheap majorant for the
    // dead-tail cutoff.
    let growth = 1.0 / mu.a() - 1.0;
    let bound0 = (mu.k() as f64).ln() + mu.tau().log_mag() + 0.02;
    let chunk = 65_536usize;
    let starts: Vec<usize> = (0..=n).step_by(chunk).collect();
    let partials = starts
        .par_iter()
        .map(|&start| -> Result<(f64, f64), MeasureError> {
            let mut re = CompensatedSum::default();
            let mut im = CompensatedSum::default();
            for i in start..(start + chunk).min(n + 1) {
                let t = i as f64 * h;
                if bound0 + t * growth - z.re * t < MIN_NORMAL_LOG {
                    continue;
                }
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = LogComplex::exp_c(-z * t)
                    .mul(mu.laplace(t)?)
                    .to_cartesian_lossy()
                    .map_err(|_| {
                        MeasureError::InvalidParameter(format!("integrand overflow at t = {t}"))
                    })?;
                re.add(w * v.re);
                im.add(w * v.im);
            }
            Ok((re.value(), im.value()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for (r, i) in partials {
        re.add(r);
        im.add(i);
    }
    Ok(Complex64::new(re.value(), im.value()) * (h / 3.0))
}

/// Simpson value of `integral of L mu over [0, t]`, the quadrature route
/// to `N mu(t)`.
pub fn integral_of_laplace(mu: &RingMeasure, t: f64, n: usize) -> Result<Complex64, MeasureError> {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = t / n as f64;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let v = mu.laplace(i as f64 * h)?.to_cartesian_lossy().map_err(|_| {
            MeasureError::InvalidParameter(format!("integrand overflow at node {i}"))
        })?;
        re.add(w * v.re);
        im.add(w * v.im);
    }
    Ok(Complex64::new(re.value(), im.value()) * (h / 3.0))
}

/// A finite diagonal model for the resolvent line-integral identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PlancherelModel {
    pub xi: f64,
    pub eigs: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

/// Seeded family of small models: 1..=6 eigenvalues with `Re in [-3,-0.5]`,
/// `Im in [-5,5]`, `xi in [0.5,2)`, complex weights in the unit box.
pub fn sample_models(seed: u64, count: usize) -> Vec<PlancherelModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=6usize);
            let xi = rng.random_range(0.5..2.0);
            let eigs = (0..n)
                .map(|_| {
                    Complex64::new(rng.random_range(-3.0..-0.5), rng.random_range(-5.0..5.0))
                })
                .collect();
            let weights = (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            PlancherelModel { xi, eigs, weights }
        })
        .collect()
}

/// Trapezoid value of `xi * integral of ||R(xi + i eta) x||^2 d eta` over
/// `[-half_range, half_range]`: the quadrature side of the Plancherel
/// identity. Pole distance to the line is `xi - Re lambda >= 1`, so the
/// trapezoid aliasing error dies like `e^(-2 pi/h)`; the truncated tails
/// fall off like `1/half_range`.
pub fn plancherel_quadrature(model: &PlancherelModel, half_range: f64, n: usize) -> f64 {
    let h = 2.0 * half_range / n as f64;
    let terms: Vec<(f64, f64, f64)> = model
        .eigs
        .iter()
        .zip(&model.weights)
        .map(|(l, x)| ((model.xi - l.re) * (model.xi - l.re), l.im, model.xi * x.norm_sqr()))
        .collect();
    let mut acc = CompensatedSum::default();
    for i in 0..=n {
        let eta = -half_range + i as f64 * h;
        let mut v = 0.0;
        for &(a, b, c) in &terms {
            v += c / (a + (eta - b) * (eta - b));
        }
        acc.add(if i == 0 || i == n { 0.5 * v } else { v });
    }
    h * acc.value()
}

/// Per-model relative gaps between the quadrature and the closed form,
/// evaluated in parallel but reported in model order.
pub fn plancherel_gaps(models: &[PlancherelModel], half_range: f64, n: usize) -> Vec<f64> {
    models
        .par_iter()
        .map(|m| {
            let closed = crate::multsg::plancherel_criterion_value(&m.eigs, &m.weights, m.xi)
                .expect("sampled models satisfy the closed-form preconditions");
            let quad = plancherel_quadrature(m, half_range, n);
            (quad - closed).abs() / closed
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let got = simpson_complex(|t| Complex64::new(3.0 * t * t, t), 1.0, 2);
        assert!((got - Complex64::new(1.0, 0.5)).norm() <= 1e-15);
    }

    #[test]
    fn simpson_integrates_a_sine_arch() {
        let got = simpson_complex(|t| Complex64::new(t.sin(), 0.0), std::f64::consts::PI, 200);
        assert!((got.re - 2.0).abs() <= 1e-8);
    }

    #[test]
    fn laplace_of_laplace_recovers_cauchy() {
        let mu = RingMeasure::build(1.0, 0.75, 5.0, 0.2, 1.0, 0.5).unwrap();
        let z = Complex64::new(1.0, 0.0);
        let got = laplace_of_laplace(&mu, z, 50.0 * mu.a(), 200_000).unwrap();
        let want = mu.cauchy_closed(z).unwrap().to_cartesian().unwrap();
        assert!((got - want).norm() <= 1e-6 * want.norm(), "got {got}, want {want}");
    }

    #[test]
    fn integral_of_laplace_recovers_integrated_transform() {
        let mu = RingMeasure::build(1.0, 1.0, 10.0, 0.25, 1.0, 0.5).unwrap();
        let got = integral_of_laplace(&mu, 6.0, 20_000).unwrap();
        let want = mu.laplace_integral(6.0).unwrap().to_cartesian().unwrap();
        assert!((got - want).norm() <= 1e-6 * want.norm(), "got {got}, want {want}");
    }

    #[test]
    fn plancherel_quadrature_matches_the_single_pole_closed_form() {
        let model = PlancherelModel {
            xi: 1.0,
            eigs: vec![Complex64::new(-1.0, 0.0)],
            weights: vec![Complex64::new(1.0, 0.0)],
        };
        let got = plancherel_quadrature(&model, 1e5, 1_000_000);
        let want = std::f64::consts::FRAC_PI_2;
        assert!((got - want).abs() <= 1e-4 * want, "got {got}");
    }

    #[test]
    fn sampled_models_are_reproducible_and_in_range() {
        let a = sample_models(7, 8);
        let b = sample_models(7, 8);
        assert_eq!(a, b);
        for m in &a {
            assert!(m.xi >= 0.5 && m.xi < 2.0);
            assert!(!m.eigs.is_empty() && m.eigs.len() <= 6);
            assert_eq!(m.eigs.len(), m.weights.len());
            for l in &m.eigs {
                assert!(l.re >= -3.0 && l.re <= -0.5 && l.im.abs() <= 5.0);
            }
        }
        assert_ne!(sample_models(8, 8), a);
    }

    #[test]
    fn plancherel_gaps_are_small_on_a_seeded_family() {
        let models = sample_models(3, 6);
        for (i, gap) in plancherel_gaps(&models, 1e5, 1_000_000).iter().enumerate() {
            assert!(*gap <= 1e-4, "model {i}: gap {gap}");
        }
    }
}
