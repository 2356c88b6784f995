//! Python bindings for `localdirac-core`.

use localdirac_core::elimination;
use localdirac_core::fourier::{self, FourierSamples};
use localdirac_core::ideals::{self, GeneratorFamily};
use localdirac_core::moments::{self, CumulantSequence, LocalDirac, MomentSequence, ParetoParams};
use localdirac_core::recovery::{self, RecoveryConfig};
use localdirac_core::statmix::{self, LocalComponent};
use localdirac_core::Error;
use num_complex::Complex64 as C;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(localdirac, ValidationError, PyValueError);
create_exception!(localdirac, NumericalError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        ValidationError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for localdirac_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Mixture of local Diracs `Σ_j Σ_k λ_(j,k) δ_(ξ_j)^(k)`.
#[pyclass(name = "LocalDiracMixture", module = "localdirac", from_py_object)]
#[derive(Clone)]
struct PyMixture {
    inner: moments::LocalDiracMixture<C>,
}

#[pymethods]
impl PyMixture {
    /// `components` is a list of `(xi, [lambda_0, ..., lambda_l])`.
    #[new]
    fn new(components: Vec<(C, Vec<C>)>) -> PyResult<Self> {
        if components.iter().any(|(_, l)| l.is_empty()) {
            return Err(ValidationError::new_err(
                "a component needs at least one lambda",
            ));
        }
        let comps = components
            .into_iter()
            .map(|(xi, l)| LocalDirac::new(xi, l))
            .collect();
        Ok(Self {
            inner: moments::LocalDiracMixture::new(comps).py()?,
        })
    }

    #[getter]
    fn components(&self) -> Vec<(C, Vec<C>)> {
        self.inner
            .components()
            .iter()
            .map(|c| (c.xi, c.lambdas.clone()))
            .collect()
    }

    /// Moments `m_0, ..., m_d`.
    fn moments(&self, d: usize) -> Vec<C> {
        moments::local_dirac_moments(&self.inner, d).into_values()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("LocalDiracMixture({:?})", self.components())
    }
}

/// Output of a recovery run.
#[pyclass(name = "Recovery", module = "localdirac", get_all)]
struct PyRecovery {
    mixture: PyMixture,
    multiplicities: Vec<usize>,
    selector_ratio: Option<f64>,
    ambiguous: bool,
    /// Full diagnostics as JSON.
    diagnostics: String,
}

#[pymethods]
impl PyRecovery {
    fn __repr__(&self) -> String {
        format!(
            "Recovery(mixture={}, selector_ratio={:?})",
            self.mixture.__repr__(),
            self.selector_ratio
        )
    }
}

impl PyRecovery {
    fn from(rec: recovery::Recovery) -> PyResult<Self> {
        let d = &rec.diagnostics;
        Ok(Self {
            multiplicities: d.multiplicities.clone(),
            selector_ratio: d.selector_ratio,
            ambiguous: d.ambiguous,
            diagnostics: serde_json::to_string(d)
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))?,
            mixture: PyMixture { inner: rec.mixture },
        })
    }
}

/// Piecewise-linear signal on `[-pi, pi)`, zero outside its first and last breakpoint.
#[pyclass(name = "PiecewiseLinearSignal", module = "localdirac")]
struct PySignal {
    inner: fourier::PiecewiseLinearSignal,
}

#[pymethods]
impl PySignal {
    #[new]
    fn new(breakpoints: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: fourier::PiecewiseLinearSignal::new(breakpoints, values, slopes).py()?,
        })
    }

    #[getter]
    fn breakpoints(&self) -> Vec<f64> {
        self.inner.breakpoints().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn slopes(&self) -> Vec<f64> {
        self.inner.slopes().to_vec()
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval(x)
    }

    /// `c_(-s), ..., c_s`.
    fn fourier_coefficients(&self, s: usize) -> PyResult<Vec<C>> {
        Ok(fourier::fourier_coefficients(&self.inner, s)
            .py()?
            .coeffs()
            .to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "PiecewiseLinearSignal(breakpoints={:?}, values={:?}, slopes={:?})",
            self.inner.breakpoints(),
            self.inner.values(),
            self.inner.slopes()
        )
    }
}

/// Gaussian base convolved with a local Dirac mixture.
#[pyclass(name = "LocalGaussianMixture", module = "localdirac")]
struct PyGaussianMixture {
    inner: statmix::LocalGaussianMixture,
}

#[pymethods]
impl PyGaussianMixture {
    /// `components` is a list of `(xi, weight, [alpha_1, ..., alpha_l])`.
    #[new]
    #[pyo3(signature = (components, sigma = 1.0))]
    fn new(components: Vec<(f64, f64, Vec<f64>)>, sigma: f64) -> PyResult<Self> {
        let comps = components
            .into_iter()
            .map(|(xi, weight, alphas)| LocalComponent { xi, weight, alphas })
            .collect();
        Ok(Self {
            inner: statmix::LocalGaussianMixture::new(comps, sigma).py()?,
        })
    }

    #[getter]
    fn components(&self) -> Vec<(f64, f64, Vec<f64>)> {
        self.inner
            .components()
            .iter()
            .map(|c| (c.xi, c.weight, c.alphas.clone()))
            .collect()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    fn density(&self, x: f64) -> f64 {
        self.inner.density(x)
    }

    fn analytic_moments(&self, d: usize) -> Vec<f64> {
        self.inner.analytic_moments(d).into_values()
    }

    #[pyo3(signature = (n, seed = 0))]
    fn sample(&self, py: Python<'_>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
        py.detach(|| self.inner.sample(n, seed)).py()
    }
}

fn real_moments(m: Vec<f64>) -> PyResult<MomentSequence<f64>> {
    MomentSequence::new(m).py()
}

fn complex_moments(m: Vec<C>) -> PyResult<MomentSequence<C>> {
    MomentSequence::new(m).py()
}

fn config(
    statistical: bool,
    allow_ambiguous: bool,
    seed: u64,
    starts: Option<usize>,
) -> RecoveryConfig {
    let mut cfg = RecoveryConfig {
        statistical,
        allow_ambiguous,
        seed,
        ..RecoveryConfig::default()
    };
    if let Some(n) = starts {
        cfg.starts = n;
    }
    cfg
}

#[pyfunction]
fn local_dirac_moments(mixture: &PyMixture, d: usize) -> Vec<C> {
    mixture.moments(d)
}

/// Cumulants `k_1, ..., k_d` of a normalized moment sequence.
#[pyfunction]
fn moments_to_cumulants(moments: Vec<f64>) -> PyResult<Vec<f64>> {
    let m = MomentSequence::normalized(moments).py()?;
    Ok(moments::moments_to_cumulants(&m).py()?.values().to_vec())
}

/// Moments `m_0 = 1, ..., m_d` from cumulants `k_1, ..., k_d`.
#[pyfunction]
fn cumulants_to_moments(cumulants: Vec<f64>) -> PyResult<Vec<f64>> {
    let k = CumulantSequence::new(cumulants).py()?;
    Ok(moments::cumulants_to_moments(&k).into_values())
}

#[pyfunction]
fn mgf_convolve(a: Vec<f64>, b: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(moments::mgf_convolve(&real_moments(a)?, &real_moments(b)?)
        .py()?
        .into_values())
}

#[pyfunction]
fn pareto_moments(alpha: f64, xi: f64, d: usize) -> PyResult<Vec<f64>> {
    Ok(moments::pareto_moments(&ParetoParams::new(alpha, xi), d)
        .py()?
        .into_values())
}

/// Numeric rank of `M_(s,s)` for `s = 0, 1, ...`.
#[pyfunction]
fn rank_profile(moments: Vec<C>) -> PyResult<Vec<usize>> {
    let m = complex_moments(moments)?;
    Ok(localdirac_core::hankel::rank_profile(
        &m,
        localdirac_core::hankel::DEFAULT_RANK_TOL,
    ))
}

/// Recovers `r` components of order `l` from at least `(l+2)r` moments.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (moments, r, l, *, statistical = false, allow_ambiguous = false, seed = 0, starts = None))]
fn recover(
    py: Python<'_>,
    moments: Vec<C>,
    r: usize,
    l: usize,
    statistical: bool,
    allow_ambiguous: bool,
    seed: u64,
    starts: Option<usize>,
) -> PyResult<PyRecovery> {
    let m = complex_moments(moments)?;
    let cfg = config(statistical, allow_ambiguous, seed, starts);
    PyRecovery::from(py.detach(|| recovery::recover(&m, r, l, &cfg)).py()?)
}

/// Classical Prony with multiplicities on all given moments.
#[pyfunction]
fn prony_linear(moments: Vec<C>) -> PyResult<PyRecovery> {
    let m = complex_moments(moments)?;
    PyRecovery::from(recovery::prony_linear(&m, &RecoveryConfig::default()).py()?)
}

type TwoMixRow = (C, C, C, C, C, f64);

/// Candidate tuples `(xi1, xi2, lambda, lambda1, lambda2, m6_residual)` for two
/// first-order components, best first.
#[pyfunction]
#[pyo3(signature = (moments, statistical = false))]
fn recover_two_component(
    moments: Vec<C>,
    statistical: bool,
) -> PyResult<Vec<TwoMixRow>> {
    let rec = elimination::recover_two_component(&complex_moments(moments)?, statistical).py()?;
    Ok(rec
        .candidates
        .into_iter()
        .map(|t| (t.xi1, t.xi2, t.lambda, t.lambda1, t.lambda2, t.m6_residual))
        .collect())
}

/// `(all_pass, max_ratio)` for a generator family on a dehomogenized moment vector.
#[pyfunction]
#[pyo3(signature = (moments, family, tol = ideals::DEFAULT_IDEAL_TOL))]
fn ideal_check(moments: Vec<C>, family: &str, tol: f64) -> PyResult<(bool, f64)> {
    let fam = GeneratorFamily::parse(family).py()?;
    let rep = ideals::ideal_check(&complex_moments(moments)?, fam, tol).py()?;
    Ok((rep.all_pass, rep.max_ratio))
}

/// Signal with `r` breakpoints from coefficients `c_(-s), ..., c_s`.
#[pyfunction]
#[pyo3(signature = (coeffs, r, *, seed = 0))]
fn reconstruct_signal(py: Python<'_>, coeffs: Vec<C>, r: usize, seed: u64) -> PyResult<PySignal> {
    if coeffs.len().is_multiple_of(2) {
        return Err(ValidationError::new_err("expected 2s+1 coefficients"));
    }
    let c = FourierSamples::new(coeffs.len() / 2, coeffs).py()?;
    let cfg = RecoveryConfig {
        seed,
        ..RecoveryConfig::default()
    };
    let rec = py
        .detach(|| fourier::reconstruct_signal(&c, r, &cfg))
        .py()?;
    Ok(PySignal {
        inner: rec.inversion.signal,
    })
}

#[pyfunction]
fn empirical_moments(xs: Vec<f64>, d: usize) -> PyResult<Vec<f64>> {
    Ok(statmix::empirical_moments(&xs, d).py()?.into_values())
}

/// Estimates `r` local Gaussian components of order `l` from observed moments,
/// returned as `(xi, weight, alphas)`. Weights need not sum exactly to one.
#[pyfunction]
#[pyo3(signature = (moments, r, l, sigma = 1.0, *, seed = 0))]
fn estimate(
    py: Python<'_>,
    moments: Vec<f64>,
    r: usize,
    l: usize,
    sigma: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64, Vec<f64>)>> {
    let m = real_moments(moments)?;
    let base = statmix::gaussian_moments(sigma, m.degree());
    let cfg = config(true, true, seed, None);
    let est = py
        .detach(|| statmix::estimate(&m, r, l, &base, &cfg))
        .py()?;
    Ok(est
        .components
        .into_iter()
        .map(|c| (c.xi, c.weight, c.alphas))
        .collect())
}

#[pymodule]
fn localdirac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMixture>()?;
    m.add_class::<PyRecovery>()?;
    m.add_class::<PySignal>()?;
    m.add_class::<PyGaussianMixture>()?;
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(local_dirac_moments, m)?)?;
    m.add_function(wrap_pyfunction!(moments_to_cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(cumulants_to_moments, m)?)?;
    m.add_function(wrap_pyfunction!(mgf_convolve, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_moments, m)?)?;
    m.add_function(wrap_pyfunction!(rank_profile, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(prony_linear, m)?)?;
    m.add_function(wrap_pyfunction!(recover_two_component, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_check, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_signal, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_moments, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    Ok(())
}
