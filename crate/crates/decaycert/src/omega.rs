//! Geometry of the spectral-free region `Omega = {Re z > -c(1+|Im z|)^-alpha}`
//! and distances to its complement `S`.
//!
//! Also home to the two search primitives the rest of the crate leans on:
//! geometric grids ([`log_spaced`]) and a bracketed golden-section line
//! search ([`golden_min`]).

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OmegaError {
    #[error("region parameters must be positive: alpha = {alpha}, c = {c}")]
    InvalidParameter { alpha: f64, c: f64 },
    #[error("point {z} is not in the open region (boundary at Re = {bound:.6e})")]
    OutsideRegion { z: Complex64, bound: f64 },
}

/// `n` geometrically spaced points from `lo` to `hi` inclusive.
/// Requires `0 < lo < hi` and `n >= 2`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2, "log_spaced({lo}, {hi}, {n})");
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    out[0] = lo;
    out[n - 1] = hi;
    out
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`, run until the
/// bracket is narrower than `tol` (or 200 shrink steps, whichever is first,
/// so a sub-ulp `tol` cannot loop forever). Returns `(argmin, min)`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fc < fd && fc < fx {
        (c, fc)
    } else if fd <= fc && fd < fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

/// The open region `{Re z > -c (1 + |Im z|)^-alpha}`. Its complement side
/// `S` carries the spectrum in every model here; the boundary curve
/// approaches the imaginary axis as `|Im z|` grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRegion {
    alpha: f64,
    c: f64,
}

impl OmegaRegion {
    pub fn new(alpha: f64, c: f64) -> Result<Self, OmegaError> {
        if !(alpha > 0.0) || !(c > 0.0) || !alpha.is_finite() || !c.is_finite() {
            return Err(OmegaError::InvalidParameter { alpha, c });
        }
        Ok(Self { alpha, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Real part of the boundary at height `y`.
    pub fn boundary_re(&self, y: f64) -> f64 {
        -self.c * (1.0 + y.abs()).powf(-self.alpha)
    }

    /// The boundary point `zeta(y) = -c(1+|y|)^-alpha + iy`.
    pub fn boundary_point(&self, y: f64) -> Complex64 {
        Complex64::new(self.boundary_re(y), y)
    }

    /// Strict interior test; boundary points count as outside.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.boundary_re(z.im)
    }

    /// Distance from an interior point to the closed complement `S`.
    ///
    /// The nearest point of `S` lies on the boundary curve, and by the
    /// up-down symmetry of the curve the minimizing height shares the sign
    /// of `Im z`, so the search runs over `y >= 0` after reflecting.
    /// A 512-point geometric grid picks the basin (the objective can have
    /// two local minima near the origin); golden-section then refines to a
    /// few ulps of the bracket.
    pub fn dist_to_s(&self, z: Complex64) -> Result<f64, OmegaError> {
        self.dist_to_s_gridded(z, 512)
    }

    fn dist_to_s_gridded(&self, z: Complex64, grid: usize) -> Result<f64, OmegaError> {
        let bound = self.boundary_re(z.im);
        if !(z.re > bound) {
            return Err(OmegaError::OutsideRegion { z, bound });
        }
        let zz = Complex64::new(z.re, z.im.abs());
        let obj = |y: f64| (zz - self.boundary_point(y)).norm();
        let y_max = 10f64.max(10.0 * zz.im);
        let mut ys = Vec::with_capacity(grid);
        ys.push(0.0);
        ys.extend(log_spaced(y_max * 1e-6, y_max, grid - 1));
        let (mut best_i, mut best) = (0, f64::INFINITY);
        for (i, &y) in ys.iter().enumerate() {
            let v = obj(y);
            if v < best {
                best_i = i;
                best = v;
            }
        }
        let lo = ys[best_i.saturating_sub(1)];
        let hi = ys[(best_i + 1).min(ys.len() - 1)];
        let tol = 4.0 * f64::EPSILON * (1.0 + hi);
        let (_, refined) = golden_min(obj, lo, hi, tol);
        Ok(refined.min(best))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_region() -> OmegaRegion {
        OmegaRegion::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn log_spaced_endpoints_and_monotone() {
        let g = log_spaced(1e-3, 1e3, 121);
        assert_eq!(g.len(), 121);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[120], 1e3);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn golden_finds_quadratic_minimum() {
        let (x, v) = golden_min(|x| (x - 1.25) * (x - 1.25) + 0.5, 0.0, 3.0, 1e-12);
        assert!((x - 1.25).abs() <= 1e-6);
        assert!((v - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn containment_examples() {
        let r = unit_region();
        assert!(r.contains(Complex64::new(0.0, 0.0)));
        assert!(!r.contains(Complex64::new(-1.0, 0.0)));
        assert!(!r.contains(Complex64::new(-0.5, 10.0)));
        assert!(r.contains(Complex64::new(-0.05, 10.0)));
    }

    #[test]
    fn boundary_at_origin() {
        assert_eq!(unit_region().boundary_point(0.0), Complex64::new(-1.0, 0.0));
        let r2 = OmegaRegion::new(2.0, 0.5).unwrap();
        let p = r2.boundary_point(3.0);
        assert!((p.re - (-0.5 / 16.0)).abs() <= 1e-15);
        assert_eq!(p.im, 3.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(OmegaRegion::new(0.0, 1.0).is_err());
        assert!(OmegaRegion::new(1.0, -2.0).is_err());
        assert!(OmegaRegion::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn distance_from_origin_matches_dense_scan() {
        let r = unit_region();
        let d = r.dist_to_s(Complex64::new(0.0, 0.0)).unwrap();
        assert!(d > 0.0 && d < 1.0, "derivative at y=0 is negative, so d < 1");
        // Dense linear scan as an independent oracle.
        let mut best = f64::INFINITY;
        for i in 0..1_000_000 {
            let y = i as f64 * 2e-6;
            best = best.min(r.boundary_point(y).norm());
        }
        assert!((d - best).abs() <= 1e-6 * best);
    }

    #[test]
    fn distance_far_on_the_real_axis() {
        let r = unit_region();
        let x = 1e3;
        let d = r.dist_to_s(Complex64::new(x, 0.0)).unwrap();
        assert!((d - x).abs() / x <= 1e-3, "d = {d}");
        assert!(d > x, "boundary sits strictly left of the axis");
    }

    #[test]
    fn outside_point_rejected() {
        let r = unit_region();
        assert!(matches!(
            r.dist_to_s(Complex64::new(-0.5, 10.0)),
            Err(OmegaError::OutsideRegion { .. })
        ));
        // Boundary itself is outside the open region.
        assert!(r.dist_to_s(r.boundary_point(2.0)).is_err());
    }

    fn arb_interior_point() -> impl Strategy<Value = (OmegaRegion, Complex64)> {
        (0.5f64..2.5, 0.25f64..2.0, -20.0f64..20.0, 0.0f64..1.0).prop_map(|(alpha, c, im, fr)| {
            let r = OmegaRegion::new(alpha, c).unwrap();
            let bound = r.boundary_re(im);
            // Strictly inside: from just off the boundary up to Re = 10.
            let re = bound + (10.0 - bound) * (fr * 0.999 + 1e-4);
            (r, Complex64::new(re, im))
        })
    }

    proptest! {
        #[test]
        fn prop_distance_is_conjugation_symmetric((r, z) in arb_interior_point()) {
            let d = r.dist_to_s(z).unwrap();
            let dc = r.dist_to_s(z.conj()).unwrap();
            prop_assert!((d - dc).abs() <= 1e-12 * d.max(1.0));
        }

        #[test]
        fn prop_distance_minimization_sound((r, z) in arb_interior_point(), ys in proptest::collection::vec(-50.0f64..50.0, 20)) {
            let d = r.dist_to_s(z).unwrap();
            for y in ys {
                prop_assert!(d <= (z - r.boundary_point(y)).norm() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn prop_grid_doubling_stable((r, z) in arb_interior_point()) {
            let d1 = r.dist_to_s_gridded(z, 512).unwrap();
            let d2 = r.dist_to_s_gridded(z, 1024).unwrap();
            prop_assert!((d1 - d2).abs() <= 1e-8 * d1.max(1e-12));
        }
    }
}
