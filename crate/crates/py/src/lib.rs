//! Python bindings for the coupling toolkit: exact lattice laws, Stein
//! coefficients, comonotone couplings, the lemma suites and both
//! embedding simulators. Exact rationals cross the boundary as `p/q`
//! strings; experiment reports come back as JSON strings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use std::str::FromStr;

use kmt_couplings::exact_dist::{self, fraction_string, Functional, LatticePMF};
use kmt_couplings::rw_embed::{InductionConfig, RwMode};
use kmt_couplings::{kmt_embed, lemma_verify, monotone_coupling, rw_embed, stein_markov};
use num_rational::BigRational;

fn err_py(e: kmt_couplings::Error) -> PyErr {
    match e {
        kmt_couplings::Error::InvalidParameter(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_fraction(s: &str) -> PyResult<BigRational> {
    BigRational::from_str(s)
        .map_err(|e| PyValueError::new_err(format!("cannot parse {s:?} as a fraction: {e}")))
}

/// Exact probability mass function on a unit-spaced shifted segment.
#[pyclass(name = "Pmf", from_py_object)]
#[derive(Clone)]
struct PyPmf {
    inner: LatticePMF,
}

#[pymethods]
impl PyPmf {
    /// Law of the half walk S_n / 2 (centered Binomial(n, 1/2)).
    #[staticmethod]
    fn walk(n: u64) -> PyResult<Self> {
        Ok(PyPmf { inner: exact_dist::walk_pmf(n).map_err(err_py)? })
    }

    /// Centered binomial with p given as a fraction string like "1/4".
    #[staticmethod]
    fn binomial(n: u64, p: &str) -> PyResult<Self> {
        let p = parse_fraction(p)?;
        Ok(PyPmf { inner: exact_dist::centered_binomial(n, &p).map_err(err_py)? })
    }

    /// Unit-lattice draw-without-replacement law (S_k[n,s] + k) / 2.
    #[staticmethod]
    fn hypergeometric(n: u64, k: u64, s: i64) -> PyResult<Self> {
        Ok(PyPmf { inner: exact_dist::hypergeometric_pmf(n, k, s).map_err(err_py)? })
    }

    /// Centered variant W_hat = S_hat - k p.
    #[staticmethod]
    fn centered_hypergeometric(n: u64, k: u64, s: i64) -> PyResult<Self> {
        Ok(PyPmf { inner: exact_dist::centered_hypergeometric(n, k, s).map_err(err_py)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn atoms(&self) -> Vec<String> {
        self.inner.atoms().iter().map(fraction_string).collect()
    }

    fn atoms_float(&self) -> Vec<f64> {
        self.inner
            .atoms()
            .iter()
            .map(kmt_couplings::numeric::ratio_to_f64)
            .collect()
    }

    fn masses(&self) -> Vec<String> {
        self.inner.masses().iter().map(fraction_string).collect()
    }

    fn masses_float(&self) -> Vec<f64> {
        self.inner
            .masses()
            .iter()
            .map(kmt_couplings::numeric::ratio_to_f64)
            .collect()
    }

    fn mean(&self) -> String {
        fraction_string(&self.inner.mean())
    }

    fn variance(&self) -> String {
        fraction_string(&self.inner.variance())
    }

    fn convolve(&self, other: &PyPmf) -> PyPmf {
        PyPmf { inner: exact_dist::convolve(&self.inner, &other.inner) }
    }

    /// Law of 2 X + R with R in {-1, 0, 1} at probabilities {1/4, 1/2, 1/4}.
    fn perturb_scale(&self) -> PyPmf {
        PyPmf { inner: exact_dist::perturb_scale(&self.inner) }
    }

    /// Exact survival values P(X >= atom), aligned with atoms().
    fn tail(&self) -> Vec<String> {
        let t = self.inner.tail();
        (0..t.len()).map(|i| fraction_string(t.survival(i))).collect()
    }

    /// Right-continuous inverse CDF at u in (0, 1).
    fn quantile(&self, u: f64) -> PyResult<String> {
        Ok(fraction_string(&self.inner.quantile(u).map_err(err_py)?))
    }

    /// E[e^{theta |X|}] as a double.
    fn abs_exp(&self, theta: f64) -> f64 {
        self.inner.expect(Functional::AbsExp(theta)).as_f64()
    }

    /// Exact r-th moment.
    fn moment(&self, r: u32) -> String {
        match self.inner.expect(Functional::Moment(r)) {
            exact_dist::Expectation::Exact(v) => fraction_string(&v),
            _ => unreachable!(),
        }
    }

    fn to_json(&self) -> String {
        self.inner.dump_json()
    }

    fn __repr__(&self) -> String {
        format!("Pmf(atoms={}, json={})", self.inner.len(), self.inner.dump_json())
    }
}

/// Stein coefficient T of a zero-mean lattice law, as fraction strings.
#[pyfunction]
fn stein_coefficient(pmf: &PyPmf) -> PyResult<Vec<String>> {
    let t = stein_markov::stein_from_pmf(&pmf.inner).map_err(err_py)?;
    Ok(t.values().iter().map(fraction_string).collect())
}

/// Comonotone coupling: list of (left atom, right atom, mass) strings.
#[pyfunction]
fn comonotone_couple(a: &PyPmf, b: &PyPmf) -> Vec<(String, String, String)> {
    monotone_coupling::comonotone_couple(&a.inner, &b.inner)
        .pairs()
        .map(|(x, y, m)| (fraction_string(x), fraction_string(y), fraction_string(m)))
        .collect()
}

/// Exact mass-domination suite; returns (pass, checked, violations).
#[pyfunction]
fn check_mass_domination(m_max: u64) -> PyResult<(bool, u64, usize)> {
    let r = lemma_verify::check_mass_domination(m_max).map_err(err_py)?;
    Ok((r.pass(), r.checked, r.violations.len()))
}

/// Exact tail-domination suite; returns (pass, discovered m0).
#[pyfunction]
fn check_tail_domination(m_max: u64) -> PyResult<(bool, u64)> {
    let r = lemma_verify::check_tail_domination(m_max).map_err(err_py)?;
    Ok((r.pass(), r.threshold.unwrap_or(0)))
}

/// Signed 2S_n-vs-S_4n coupling margins; returns (threshold n0, pass).
#[pyfunction]
fn theorem_1_4(n_max: u64) -> PyResult<(u64, bool)> {
    let r = monotone_coupling::theorem_1_4_sweep(n_max).map_err(err_py)?;
    let pass = r.pass_from_threshold();
    Ok((r.threshold, pass))
}

/// Walk-vs-Gaussian endpoint checks; returns the discovered threshold.
#[pyfunction]
fn lemma_1_1_threshold(n_max: u64) -> PyResult<u64> {
    let (_, t) = monotone_coupling::lemma_1_1_sweep(n_max).map_err(err_py)?;
    Ok(t)
}

/// Exact functional E[e^{theta |2 S_n - S_4n|}] of the stationary coupling.
#[pyfunction]
fn couple_binomials(n: u64, theta: f64) -> PyResult<f64> {
    Ok(stein_markov::couple_binomials(n, theta, 0).map_err(err_py)?.functional)
}

/// Dyadic empirical-process experiment; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (n_list, reps, seed, depth_rule=None))]
fn ep_experiment(n_list: Vec<u64>, reps: u64, seed: u64, depth_rule: Option<u32>) -> PyResult<String> {
    let e = kmt_embed::run_ep_experiment(&n_list, reps, depth_rule, seed, 1).map_err(err_py)?;
    Ok(e.to_json().render())
}

/// Recursive walk-bridge experiment; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (n_list, t, lambda_list, reps, seed, full=false))]
fn rw_experiment(
    n_list: Vec<u64>,
    t: i64,
    lambda_list: Vec<f64>,
    reps: u64,
    seed: u64,
    full: bool,
) -> PyResult<String> {
    let mode = if full { RwMode::Full } else { RwMode::Bridge };
    let cfg = InductionConfig::calibrated();
    let e = rw_embed::run_rw_experiment(&n_list, t, &lambda_list, reps, seed, mode, &cfg)
        .map_err(err_py)?;
    Ok(e.to_json().render())
}

/// Standard normal CDF.
#[pyfunction]
fn normal_cdf(z: f64) -> f64 {
    monotone_coupling::normal::cdf(z)
}

/// Standard normal quantile on (0, 1).
#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    if !(0.0 < p && p < 1.0) {
        return Err(PyValueError::new_err("p must lie in (0, 1)"));
    }
    Ok(monotone_coupling::normal::inverse_cdf(p))
}

#[pymodule]
fn kmt_couplings_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPmf>()?;
    m.add_function(wrap_pyfunction!(stein_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(comonotone_couple, m)?)?;
    m.add_function(wrap_pyfunction!(check_mass_domination, m)?)?;
    m.add_function(wrap_pyfunction!(check_tail_domination, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_1_4, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_1_1_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(couple_binomials, m)?)?;
    m.add_function(wrap_pyfunction!(ep_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(rw_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    Ok(())
}
