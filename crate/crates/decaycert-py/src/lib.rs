//! Python bindings: thin wrappers over the core crate.
//!
//! Transform values that live in log-magnitude/phase form cross the
//! boundary as `(log_mag, phase)` tuples — measure weights reach
//! `A^(k-1)`, far past any float — while ordinary finite quantities come
//! back as Python floats and complexes.

use decaycert::blocksg::{self, DiagonalModel};
use decaycert::logcomplex::LogComplex;
use decaycert::multsg::MultModel;
use decaycert::omega::OmegaRegion;
use decaycert::rates::{self, RateFunction};
use decaycert::ringmeasure::{self, RingMeasure};
use decaycert::stagefn::{default_psi, GammaWeight, StagedFunction};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pair(v: LogComplex) -> (f64, f64) {
    (v.log_mag(), v.phase())
}

fn parse_gamma(name: &str) -> PyResult<GammaWeight> {
    match name {
        "invlog" => Ok(GammaWeight::InverseLogEPlus),
        "one" => Ok(GammaWeight::Constant),
        _ => Err(PyValueError::new_err(format!(
            "unknown gamma weight {name:?} (expected \"invlog\" or \"one\")"
        ))),
    }
}

/// Rate function `M`: either `scale * (1 + eta)^exponent` or a
/// piecewise-linear table of `(eta, M)` samples.
#[pyclass(name = "RateFunction")]
struct PyRateFunction {
    inner: RateFunction,
}

#[pymethods]
impl PyRateFunction {
    #[staticmethod]
    fn polynomial(scale: f64, exponent: f64) -> PyResult<Self> {
        Ok(Self { inner: RateFunction::polynomial(scale, exponent).map_err(err)? })
    }

    #[staticmethod]
    fn tabulated(points: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: RateFunction::tabulated(points).map_err(err)? })
    }

    fn eval(&self, eta: f64) -> PyResult<f64> {
        self.inner.eval(eta).map_err(err)
    }

    /// `M_log(eta) = M(eta) (log(1 + M(eta)) + log(1 + eta))`.
    fn m_log(&self, eta: f64) -> PyResult<f64> {
        self.inner.m_log(eta).map_err(err)
    }

    fn invert_m_log(&self, y: f64) -> PyResult<f64> {
        self.inner.invert_m_log(y).map_err(err)
    }

    /// The decay envelope `c / M_log^-1(t)` at time `t`.
    fn decay_envelope(&self, c: f64, t: f64) -> PyResult<f64> {
        self.inner.decay_envelope(c, t).map_err(err)
    }
}

/// The region `{Re z > -c (1 + |Im z|)^-alpha}` whose complement carries
/// the spectrum.
#[pyclass(name = "OmegaRegion")]
struct PyOmegaRegion {
    inner: OmegaRegion,
}

#[pymethods]
impl PyOmegaRegion {
    #[new]
    fn new(alpha: f64, c: f64) -> PyResult<Self> {
        Ok(Self { inner: OmegaRegion::new(alpha, c).map_err(err)? })
    }

    fn boundary_re(&self, y: f64) -> f64 {
        self.inner.boundary_re(y)
    }

    fn boundary_point(&self, y: f64) -> Complex64 {
        self.inner.boundary_point(y)
    }

    fn contains(&self, z: Complex64) -> bool {
        self.inner.contains(z)
    }

    fn dist_to_s(&self, z: Complex64) -> PyResult<f64> {
        self.inner.dist_to_s(z).map_err(err)
    }
}

/// Multiplication semigroup on the region's complement: resolvent and
/// orbit-norm suprema evaluated by line search.
#[pyclass(name = "MultModel")]
struct PyMultModel {
    inner: MultModel,
}

#[pymethods]
impl PyMultModel {
    #[new]
    fn new(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: MultModel::new(alpha).map_err(err)? })
    }

    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn resolvent_norm(&self, lam: Complex64) -> PyResult<f64> {
        self.inner.resolvent_norm(lam).map_err(err)
    }

    /// `(value, y_star)` for `sup_y (1+y)^-1 e^(t Re s(y))`.
    fn orbit_norm(&self, t: f64) -> PyResult<(f64, f64)> {
        let p = self.inner.orbit_norm(t).map_err(err)?;
        Ok((p.value, p.y_star))
    }

    fn orbit_norm_with_power(&self, t: f64, p: f64) -> PyResult<(f64, f64)> {
        let o = self.inner.orbit_norm_with_power(t, p).map_err(err)?;
        Ok((o.value, o.y_star))
    }
}

/// Diagonal block model: eigenvalues on the region's boundary curve, the
/// nilpotent corner coupling scaled by `sigma_unit`.
#[pyclass(name = "DiagonalModel")]
struct PyDiagonalModel {
    inner: DiagonalModel,
}

#[pymethods]
impl PyDiagonalModel {
    #[new]
    fn new(alpha: f64, eigs: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self { inner: DiagonalModel::new(alpha, eigs).map_err(err)? })
    }

    #[staticmethod]
    fn log_spaced_model(alpha: f64, count: usize, y_max: f64) -> PyResult<Self> {
        Ok(Self { inner: DiagonalModel::log_spaced_model(alpha, count, y_max).map_err(err)? })
    }

    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn eigenvalues(&self) -> Vec<Complex64> {
        self.inner.eigenvalues().to_vec()
    }

    fn block_exp_norm(&self, t: f64) -> PyResult<f64> {
        self.inner.block_exp_norm(t).map_err(err)
    }

    fn corner_decay(&self, t: f64) -> PyResult<f64> {
        self.inner.corner_decay(t).map_err(err)
    }

    /// `(norm, smoothed)` of the block resolvent at `lam`.
    fn block_resolvent_norm(&self, lam: Complex64) -> PyResult<(f64, f64)> {
        let r = self.inner.block_resolvent_norm(lam).map_err(err)?;
        Ok((r.norm, r.smoothed))
    }
}

/// Atomic measure on a shrunk ring of k-th roots of unity at `w = -1 + iH`.
#[pyclass(name = "RingMeasure")]
struct PyRingMeasure {
    inner: RingMeasure,
}

#[pymethods]
impl PyRingMeasure {
    #[new]
    #[pyo3(signature = (alpha, beta, h, psi, q_threshold = 1.0, eps = 0.5))]
    fn new(
        alpha: f64,
        beta: f64,
        h: f64,
        psi: f64,
        q_threshold: f64,
        eps: f64,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: RingMeasure::build(alpha, beta, h, psi, q_threshold, eps).map_err(err)?,
        })
    }

    fn k(&self) -> u64 {
        self.inner.k()
    }

    fn a(&self) -> f64 {
        self.inner.a()
    }

    fn h(&self) -> f64 {
        self.inner.h()
    }

    fn w(&self) -> Complex64 {
        self.inner.w()
    }

    fn bracket_ok(&self) -> bool {
        self.inner.bracket_ok()
    }

    fn mass(&self) -> (f64, f64) {
        pair(self.inner.mass())
    }

    fn cauchy(&self, z: Complex64) -> PyResult<(f64, f64)> {
        Ok(pair(self.inner.cauchy_closed(z).map_err(err)?))
    }

    fn cauchy_brute(&self, z: Complex64) -> PyResult<(f64, f64)> {
        Ok(pair(self.inner.cauchy_brute(z).map_err(err)?))
    }

    fn laplace(&self, t: f64) -> PyResult<(f64, f64)> {
        Ok(pair(self.inner.laplace(t).map_err(err)?))
    }

    fn laplace_brute(&self, t: f64) -> PyResult<(f64, f64)> {
        Ok(pair(self.inner.laplace_brute(t).map_err(err)?))
    }

    /// Integrated Laplace transform over `[0, t]`.
    fn laplace_integral(&self, t: f64) -> PyResult<(f64, f64)> {
        Ok(pair(self.inner.laplace_integral(t).map_err(err)?))
    }

    fn orbit_lower_bound(&self) -> PyResult<f64> {
        self.inner.orbit_lower_bound().map_err(err)
    }

    /// Certificates for the five transform bounds, as a JSON array.
    #[pyo3(signature = (b_cap = 1e4))]
    fn certify_json(&self, b_cap: f64) -> PyResult<String> {
        let certs = self.inner.certify_bounds(b_cap).map_err(err)?;
        serde_json::to_string(&certs).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "RingMeasure(k={}, H={}, A={:.3})",
            self.inner.k(),
            self.inner.h(),
            self.inner.a()
        )
    }
}

/// Staged sum of damped measure transforms whose decay is sharp against
/// the `(log t / t)^(1/alpha)` envelope.
#[pyclass(name = "StagedFunction")]
struct PyStagedFunction {
    inner: StagedFunction,
}

#[pymethods]
impl PyStagedFunction {
    #[new]
    #[pyo3(signature = (alpha, beta, psi = None, gamma = "invlog"))]
    fn new(alpha: f64, beta: f64, psi: Option<f64>, gamma: &str) -> PyResult<Self> {
        let psi = psi.unwrap_or_else(|| default_psi(alpha, beta));
        Ok(Self { inner: StagedFunction::new(alpha, beta, psi, parse_gamma(gamma)?).map_err(err)? })
    }

    /// Append the next stage of the ladder.
    fn extend(&mut self) -> PyResult<()> {
        self.inner.extend().map_err(err)
    }

    fn stage_count(&self) -> usize {
        self.inner.stages().len()
    }

    fn eval_f(&self, t: f64) -> PyResult<Complex64> {
        self.inner.eval_f(t).map_err(err)
    }

    /// The sum truncated to stages at or beyond the one peaking at `t`.
    fn tail(&self, t: f64) -> PyResult<Complex64> {
        self.inner.tail(t).map_err(err)
    }

    /// `(t / (gamma(t) ln t)) |tail(t)|^alpha` at stage `m`'s peak.
    fn sharpness_ratio(&self, m: u32) -> PyResult<f64> {
        Ok(self.inner.sharpness_ratio(m).map_err(err)?.ratio)
    }

    /// Least `c` with `|f| <= c (ln t / t)^(1/alpha)` beyond stage `m`'s
    /// threshold.
    fn envelope_constant(&self, m: u32) -> PyResult<f64> {
        self.inner.envelope_constant(m).map_err(err)
    }
}

/// `sup_x x sigma(x b)` scaling of the corner coupling.
#[pyfunction]
fn sigma_unit(b: f64) -> f64 {
    blocksg::sigma_unit(b)
}

/// `C (1 + t)^(-1/alpha)`-type decay bound for polynomial resolvent growth.
#[pyfunction]
fn poly_decay_bound(alpha: f64, t: f64) -> PyResult<f64> {
    rates::poly_decay_bound(alpha, t).map_err(err)
}

/// Both root-of-unity identities at `x`, brute sums against closed forms:
/// `(lhs1, rhs1, lhs2, rhs2)` as `(log_mag, phase)` tuples.
#[pyfunction]
fn roots_identity_check(
    k: u64,
    x: Complex64,
) -> PyResult<((f64, f64), (f64, f64), (f64, f64), (f64, f64))> {
    let c = ringmeasure::roots_identity_check(k, x).map_err(err)?;
    Ok((pair(c.lhs1), pair(c.rhs1), pair(c.lhs2), pair(c.rhs2)))
}

#[pymodule]
fn decaycert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRateFunction>()?;
    m.add_class::<PyOmegaRegion>()?;
    m.add_class::<PyMultModel>()?;
    m.add_class::<PyDiagonalModel>()?;
    m.add_class::<PyRingMeasure>()?;
    m.add_class::<PyStagedFunction>()?;
    m.add_function(wrap_pyfunction!(sigma_unit, m)?)?;
    m.add_function(wrap_pyfunction!(poly_decay_bound, m)?)?;
    m.add_function(wrap_pyfunction!(roots_identity_check, m)?)?;
    Ok(())
}
