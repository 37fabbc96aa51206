//! Acceptance gate: one test per shipped guarantee, each printing a single
//! `criterion N: pass` line (visible under `--nocapture`). Tolerances and
//! recorded constants are pinned here on purpose — loosening one is a
//! contract change, not a test fix.

use decaycert::blocksg::DiagonalModel;
use decaycert::logcomplex::LogComplex;
use decaycert::multsg::MultModel;
use decaycert::omega::log_spaced;
use decaycert::rates::{poly_decay_bound, RateFunction};
use decaycert::ringmeasure::{roots_identity_check, RingMeasure};
use decaycert::stagefn::{GammaWeight, StagedFunction};
use decaycert::verify::{
    integral_of_laplace, laplace_of_laplace, plancherel_gaps, sample_models,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn rel_gap(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn lc_rel_gap(a: LogComplex, b: LogComplex) -> f64 {
    rel_gap(a.to_cartesian_lossy().unwrap(), b.to_cartesian_lossy().unwrap())
}

#[test]
fn criterion_01_root_of_unity_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut max_rel = 0.0f64;
    for k in 3..=40u64 {
        // The brute side sums k unit-size terms that cancel down to
        // ~k/x^k, so |x|^(k-1) must stay within the 1e-10 target's budget.
        let cap = (1e3 * k as f64).powf(1.0 / k as f64).min(3.0);
        for _ in 0..1000 {
            // Magnitudes keep a margin from the unit circle so that the
            // identities' poles at the roots of unity stay away.
            let mag = if rng.random_bool(0.5) {
                rng.random_range(0.2..0.9)
            } else {
                rng.random_range(1.1..cap)
            };
            let x = Complex64::from_polar(mag, rng.random_range(-3.1..3.1));
            let check = roots_identity_check(k, x).unwrap();
            max_rel = max_rel.max(lc_rel_gap(check.lhs1, check.rhs1));
            max_rel = max_rel.max(lc_rel_gap(check.lhs2, check.rhs2));
        }
    }
    assert!(max_rel <= 1e-10, "worst identity gap {max_rel}");
    println!("criterion 1: pass — 38 x 1000 random points, max rel {max_rel:.2e}");
}

/// `k` atoms at height 10 hit exactly by solving the count law for psi.
fn ladder_measure(k: u64) -> RingMeasure {
    let h = 10.0f64;
    RingMeasure::build(1.0, 1.0, h, k as f64 / (h * h.ln()), 1.0, 0.5).unwrap()
}

struct Guarded {
    max_rel: f64,
    survivors: usize,
}

/// Closed-form versus brute-force with the cancellation guard: points are
/// skipped when the value is negligible against the grid peak or the brute
/// sum's predicted noise floor (`k * eps * peak_term / |value|`) exceeds the
/// admission threshold. Thresholds are calibrated: realized error runs up to
/// ~5x the prediction for the Cauchy sums and ~10x for the Laplace series.
fn guarded<F: Copy>(
    measure: &RingMeasure,
    points: &[F],
    eval: impl Fn(&RingMeasure, F) -> (LogComplex, decaycert::ringmeasure::BruteSum),
    admit: f64,
) -> Guarded {
    let pairs: Vec<_> = points.iter().map(|&p| eval(measure, p)).collect();
    let peak = pairs.iter().map(|(c, _)| c.log_mag()).fold(f64::NEG_INFINITY, f64::max);
    let noise_floor = measure.k() as f64 * f64::EPSILON;
    let mut out = Guarded { max_rel: 0.0, survivors: 0 };
    for (closed, brute) in pairs {
        let tiny = closed.log_mag() < peak + f64::ln(1e-10);
        let noise = noise_floor * f64::exp(brute.peak_term_log_mag - closed.log_mag());
        if tiny || noise > admit {
            continue;
        }
        out.max_rel = out.max_rel.max(lc_rel_gap(closed, brute.value));
        out.survivors += 1;
    }
    out
}

/// 100 random points of the spectrum-free region at least 0.5 from the ring
/// center, with every third draw concentrated near the ring's height so the
/// narrow large-k cancellation budget still sees admissible points.
fn omega_sample(w: Complex64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut zs = Vec::with_capacity(100);
    while zs.len() < 100 {
        let y: f64 = if zs.len() % 3 == 0 {
            rng.random_range(9.5..10.5)
        } else {
            rng.random_range(7.0..13.0)
        };
        let boundary = -1.0 / (1.0 + y);
        let z = Complex64::new(rng.random_range(boundary * 0.999..0.5), y);
        if (z - w).norm() >= 0.5 {
            zs.push(z);
        }
    }
    zs
}

#[test]
fn criterion_02_transform_closed_forms_match_brute_force() {
    let mut max_rel = 0.0f64;
    let mut note = String::new();
    for k in 2..=9u64 {
        let measure = ladder_measure(k);

        let zs = omega_sample(measure.w());
        let cauchy = guarded(&measure, &zs, |m, z| {
            (m.cauchy_closed(z).unwrap(), m.cauchy_brute_sum(z).unwrap())
        }, 1e-5);
        // The admissible window shrinks with k: at k = 9 no point of the
        // region survives the budget, so that case rides on the Laplace leg.
        let min_survivors = match k {
            2..=6 => 50,
            7 => 20,
            8 => 1,
            _ => 0,
        };
        assert!(
            cauchy.survivors >= min_survivors,
            "k = {k}: {} Cauchy survivors",
            cauchy.survivors
        );
        if k == 9 && cauchy.survivors == 0 {
            note = ", k=9 Cauchy grid fully guarded".to_string();
        }
        assert!(cauchy.max_rel <= 1e-4, "k = {k}: Cauchy rel {}", cauchy.max_rel);
        max_rel = max_rel.max(cauchy.max_rel);

        // 100 Laplace points below the series radius A.
        let ts = log_spaced(0.3, 0.95 * measure.a(), 100);
        let laplace = guarded(&measure, &ts, |m, t| {
            (m.laplace_series(t).unwrap(), m.laplace_brute_sum(t).unwrap())
        }, 1e-6);
        assert!(laplace.survivors >= 25, "k = {k}: {} Laplace survivors", laplace.survivors);
        assert!(laplace.max_rel <= 1e-4, "k = {k}: Laplace rel {}", laplace.max_rel);
        max_rel = max_rel.max(laplace.max_rel);
    }
    println!("criterion 2: pass — k <= 9 ladder at height 10, max rel {max_rel:.2e}{note}");
}

#[test]
fn criterion_03_transform_interrelations() {
    // Quadrature Laplace of the Laplace transform against the Cauchy
    // transform on Re z >= 0.5.
    let small = RingMeasure::build(1.0, 0.75, 5.0, 0.2, 1.0, 0.5).unwrap();
    let t_max = 50.0 * small.a();
    let mut max_quad = 0.0f64;
    for z in [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.5, 5.0),
        Complex64::new(0.5, 10.0),
        Complex64::new(1.0, 10.0),
    ] {
        let quad = laplace_of_laplace(&small, z, t_max, 400_000).unwrap();
        let closed = small.cauchy_closed(z).unwrap().to_cartesian().unwrap();
        max_quad = max_quad.max(rel_gap(quad, closed));
    }
    assert!(max_quad <= 1e-6, "double-transform rel {max_quad}");

    // Tail identity -N(t) = fhat(0) - integral of L over [0, t] with the
    // integral done by quadrature and fhat(0) as the Cauchy transform at 0.
    let measure = RingMeasure::build(1.0, 1.0, 10.0, 0.25, 1.0, 0.5).unwrap();
    let k = measure.k() as f64;
    let fhat0 = measure.cauchy_closed(Complex64::new(0.0, 0.0)).unwrap().to_cartesian().unwrap();
    let mut max_tail = 0.0f64;
    for t in [k, 2.0 * k] {
        let lhs = -measure.laplace_integral(t).unwrap().to_cartesian().unwrap();
        let rhs = fhat0 - integral_of_laplace(&measure, t, 40_000).unwrap();
        max_tail = max_tail.max(rel_gap(lhs, rhs));
    }
    assert!(max_tail <= 1e-6, "tail identity rel {max_tail}");

    // dN/dt = L by central differences.
    let t = k;
    let h = 1e-5 * t;
    let plus = measure.laplace_integral(t + h).unwrap().to_cartesian().unwrap();
    let minus = measure.laplace_integral(t - h).unwrap().to_cartesian().unwrap();
    let derivative = (plus - minus) / (2.0 * h);
    let expected = measure.laplace(t).unwrap().to_cartesian().unwrap();
    let diff_rel = rel_gap(derivative, expected);
    assert!(diff_rel <= 1e-3, "derivative rel {diff_rel}");

    println!(
        "criterion 3: pass — double transform {max_quad:.2e}, tail {max_tail:.2e}, \
         derivative {diff_rel:.2e}"
    );
}

#[test]
fn criterion_04_five_bounds_certify_across_the_ladder() {
    let mut worst_b = 0.0f64;
    let mut worst_spread = 0.0f64;
    for (alpha, beta) in [(1.0, 1.0), (2.0, 2.0), (1.0, 0.75)] {
        let psi = 0.8 * (beta - 0.5 * alpha);
        let mut per_bound: BTreeMap<&'static str, Vec<f64>> = BTreeMap::new();
        for h in [10.0, 20.0, 40.0, 80.0] {
            let measure = RingMeasure::build(alpha, beta, h, psi, 1.0, 0.5).unwrap();
            for cert in measure.certify_bounds(1e4).unwrap() {
                assert!(
                    cert.pass,
                    "({alpha}, {beta}) H = {h}: bound {} failed with B = {}",
                    cert.bound_id, cert.b_empirical
                );
                assert!(cert.b_empirical <= 1e4);
                worst_b = worst_b.max(cert.b_empirical);
                per_bound.entry(cert.bound_id).or_default().push(cert.b_empirical);
            }
        }
        for (id, bs) in per_bound {
            let lo = bs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = bs.iter().copied().fold(0.0f64, f64::max);
            let spread = hi / lo;
            assert!(
                spread <= 4.0,
                "({alpha}, {beta}) bound {id}: B spread {spread} across the ladder"
            );
            worst_spread = worst_spread.max(spread);
        }
    }
    println!(
        "criterion 4: pass — three families, max B {worst_b:.3}, max ladder spread \
         {worst_spread:.3}"
    );
}

#[test]
fn criterion_05_staged_function_is_sharp_yet_enveloped() {
    const C3: f64 = 0.13;
    const ENVELOPE_SCALE: f64 = 0.25;
    let mut staged = StagedFunction::new(1.0, 1.0, 0.4, GammaWeight::InverseLogEPlus).unwrap();
    for _ in 0..4 {
        staged.extend().unwrap();
    }

    let mut min_ratio = f64::INFINITY;
    for m in 1..=4u32 {
        let report = staged.sharpness_ratio(m).unwrap();
        assert!(report.ratio >= C3, "stage {m}: sharpness ratio {} < {C3}", report.ratio);
        min_ratio = min_ratio.min(report.ratio);

        let constant = staged.envelope_constant(m).unwrap();
        assert!(
            constant <= ENVELOPE_SCALE,
            "stage {m}: envelope constant {constant} > {ENVELOPE_SCALE}"
        );
        // Pointwise re-check of the scaled envelope on the stage window.
        let stage = &staged.stages()[(m - 1) as usize];
        let lo = stage.threshold().max(2.0);
        let hi = 2.0 * stage.measure().k() as f64;
        for &t in &log_spaced(lo, hi, 200) {
            let tail = staged.tail(t).unwrap().norm();
            let envelope = ENVELOPE_SCALE * (t.ln() / t);
            assert!(tail <= envelope, "stage {m}: |tail({t})| = {tail} > {envelope}");
        }
    }

    let midpoints = staged.midpoint_ratios().unwrap();
    for pair in midpoints.windows(2) {
        assert!(pair[1].1 < pair[0].1, "midpoint ratios not collapsing: {midpoints:?}");
    }

    // Both curves (|tail| and the scaled envelope) go out through the CLI.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = decaycert::cli::run(
        ["decaycert", "fn", "--psi", "0.4", "--out-dir", out].map(String::from),
    );
    assert_eq!(code, 0);
    let header = std::fs::read_to_string(dir.path().join("fn.csv")).unwrap();
    assert!(header.starts_with("t,f_abs,tail_abs,envelope"));

    println!("criterion 5: pass — 4 stages, min sharpness ratio {min_ratio:.4} >= {C3}");
}

#[test]
fn criterion_06_multiplication_oracle() {
    let model = MultModel::new(1.0).unwrap();
    let mut constants = Vec::new();
    for exp in 3..=6 {
        let t = 10f64.powi(exp);
        constants.push(t * model.orbit_norm(t).unwrap().value);
    }
    for pair in constants.windows(2) {
        let step = (pair[1] / pair[0] - 1.0).abs();
        assert!(step <= 0.02, "orbit constant still moving: {constants:?}");
    }
    let limit = *constants.last().unwrap();
    assert!(limit > 0.0 && limit <= 1.0 + 1e-9, "orbit constant {limit} outside (0, 1]");

    for alpha in [1.0, 2.0] {
        let m = MultModel::new(alpha).unwrap();
        let s = 1e4;
        let ratio = m.resolvent_norm(Complex64::new(0.0, s)).unwrap() / (1.0 + s).powf(alpha);
        assert!((ratio - 1.0).abs() <= 0.05, "alpha = {alpha}: resolvent ratio {ratio}");
    }

    // Reported, not asserted: the limit the construction is believed to
    // approach is 1; the measured constant is what we actually certify.
    println!("criterion 6: pass — orbit constant {limit:.6} (claimed limit 1), resolvent on-axis");
}

#[test]
fn criterion_07_block_semigroup_bounded_with_unbounded_corner() {
    let model = DiagonalModel::log_spaced_model(1.0, 2000, 1e6).unwrap();
    let doubled = DiagonalModel::log_spaced_model(1.0, 4000, 1e6).unwrap();
    let mut ts = vec![0.0];
    ts.extend(log_spaced(1e-2, 1e6, 200));

    let mut sup = 0.0f64;
    let mut sup_doubled = 0.0f64;
    for &t in &ts {
        let norm = model.block_exp_norm(t).unwrap();
        sup = sup.max(norm);
        sup_doubled = sup_doubled.max(doubled.block_exp_norm(t).unwrap());
        if t > 0.0 {
            let corner = t * model.corner_decay(t).unwrap() - 1.0;
            assert!(norm >= corner - 1e-9, "t = {t}: block {norm} < corner term {corner}");
        }
    }
    assert!(sup.is_finite() && sup > 0.0);
    let drift = (sup_doubled / sup - 1.0).abs();
    assert!(drift <= 0.05, "sup moved {drift} under eigenvalue doubling");

    let mut band_inf = f64::INFINITY;
    let mut band_sup = 0.0f64;
    for eig in model.eigenvalues() {
        let s = eig.im;
        if !(1.0..=1e4).contains(&s) {
            continue;
        }
        let ratio =
            model.block_resolvent_norm(Complex64::new(0.0, s)).unwrap().norm / (1.0 + s).powf(1.0);
        band_inf = band_inf.min(ratio);
        band_sup = band_sup.max(ratio);
    }
    assert!(
        band_inf >= 0.1 && band_sup <= 10.0,
        "resolvent band [{band_inf}, {band_sup}] outside [0.1, 10]"
    );

    println!(
        "criterion 7: pass — sup {sup:.4} (doubling drift {drift:.2e}), resolvent band \
         [{band_inf:.2}, {band_sup:.2}]"
    );
}

#[test]
fn criterion_08_rate_calculus_round_trip_and_envelope() {
    let rate = RateFunction::polynomial(1.0, 1.0).unwrap();
    let mut max_rel = 0.0f64;
    for &eta in &log_spaced(1.0, 1e6, 500) {
        let back = rate.invert_m_log(rate.m_log(eta).unwrap()).unwrap();
        max_rel = max_rel.max((back - eta).abs() / eta);
    }
    assert!(max_rel <= 1e-8, "round-trip rel {max_rel}");

    let mut ratio_inf = f64::INFINITY;
    let mut ratio_sup = 0.0f64;
    for &t in &log_spaced(1e2, 1e8, 500) {
        let ratio =
            rate.decay_envelope(1.0, t).unwrap() / poly_decay_bound(1.0, t).unwrap();
        ratio_inf = ratio_inf.min(ratio);
        ratio_sup = ratio_sup.max(ratio);
    }
    let spread = ratio_sup / ratio_inf;
    assert!(ratio_inf > 0.0 && spread <= 10.0, "envelope spread {spread}");

    println!("criterion 8: pass — round-trip {max_rel:.2e}, envelope spread {spread:.3}");
}

#[test]
fn criterion_09_plancherel_criterion_on_random_models() {
    let models = sample_models(29, 1000);
    let gaps = plancherel_gaps(&models, 1e5, 1_000_000);
    let max_gap = gaps.iter().fold(0.0f64, |acc, &g| acc.max(g));
    assert!(max_gap <= 1e-4, "quadrature gap {max_gap}");

    for model in &models {
        let closed = decaycert::multsg::plancherel_criterion_value(
            &model.eigs,
            &model.weights,
            model.xi,
        )
        .unwrap();
        let norm_sq: f64 = model.weights.iter().map(|w| w.norm_sqr()).sum();
        assert!(
            closed <= std::f64::consts::PI * norm_sq * (1.0 + 1e-12),
            "criterion value {closed} exceeds pi * {norm_sq}"
        );
    }
    println!("criterion 9: pass — 1000 models, max quadrature gap {max_gap:.2e}");
}

#[test]
fn criterion_10_verify_reports_are_bit_identical() {
    let bin = env!("CARGO_BIN_EXE_decaycert");
    let run = |jobs: &str| {
        let dir = tempfile::tempdir().unwrap();
        let status = std::process::Command::new(bin)
            .args(["verify", "--jobs", jobs, "--out-dir"])
            .arg(dir.path())
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "verify exited with {status}");
        std::fs::read(dir.path().join("verify.json")).unwrap()
    };
    let first = run("1");
    let second = run("3");
    assert_eq!(first, second, "verify reports differ between runs");
    println!("criterion 10: pass — verify reports byte-identical across runs and thread counts");
}
