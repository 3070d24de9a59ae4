//! Python module `lawprice`. Payoffs cross the boundary as lists of floats;
//! structured reports come back as plain dicts.

use lawprice_core::capital::{law_invariance_witness, risk_measure};
use lawprice_core::friction::{collapse_scan, friction_report, DEFAULT_M_GRID};
use lawprice_core::orlicz::{delta2_check, luxemburg_norm};
use lawprice_core::quantile::{convex_order_geq, hl_product};
use lawprice_core::{self as core, AtomSpace, Distortion};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(lawprice, LawpriceError, PyValueError);

fn err(e: core::Error) -> PyErr {
    LawpriceError::new_err(e.to_string())
}

fn payoff(values: Vec<f64>) -> PyResult<core::Payoff> {
    core::Payoff::new(values).map_err(err)
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| LawpriceError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A pricing functional from the built-in catalog.
#[pyclass(module = "lawprice", frozen)]
struct Functional(core::PricingFunctional);

#[pymethods]
impl Functional {
    #[staticmethod]
    #[pyo3(signature = (c = 1.0))]
    fn expectation(c: f64) -> PyResult<Self> {
        core::PricingFunctional::expectation(c).map(Self).map_err(err)
    }

    #[staticmethod]
    fn expected_shortfall(beta: f64) -> PyResult<Self> {
        core::PricingFunctional::expected_shortfall(beta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn entropic(theta: f64) -> PyResult<Self> {
        core::PricingFunctional::entropic(theta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn mean_abs_dev(lam: f64) -> PyResult<Self> {
        core::PricingFunctional::mean_abs_dev(lam).map(Self).map_err(err)
    }

    #[staticmethod]
    fn choquet_power(gamma: f64) -> PyResult<Self> {
        let g = Distortion::power(gamma).map_err(err)?;
        core::PricingFunctional::choquet(g).map(Self).map_err(err)
    }

    #[staticmethod]
    fn gate() -> Self {
        Self(core::PricingFunctional::gate())
    }

    #[staticmethod]
    fn floor_gauge() -> Self {
        Self(core::PricingFunctional::floor_gauge())
    }

    #[staticmethod]
    fn worst_case() -> Self {
        Self(core::PricingFunctional::worst_case())
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn flags(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.flags())
    }

    fn __call__(&self, values: Vec<f64>) -> PyResult<f64> {
        self.0.eval(&payoff(values)?).map_err(err)
    }

    /// Ask, bid, spread and frictionless verdicts for one payoff.
    #[pyo3(signature = (values, tol = 1e-9))]
    fn friction(&self, py: Python<'_>, values: Vec<f64>, tol: f64) -> PyResult<Py<PyAny>> {
        let r = friction_report(&self.0, "x", &payoff(values)?, &DEFAULT_M_GRID, tol).map_err(err)?;
        to_py(py, &r)
    }

    /// Searches an n-atom space for a frictionless risky payoff.
    #[pyo3(signature = (n, tol = 1e-9, seed = 0, budget = 20_000))]
    fn collapse(&self, py: Python<'_>, n: usize, tol: f64, seed: u64, budget: usize) -> PyResult<Py<PyAny>> {
        let space = AtomSpace::new(n).map_err(err)?;
        let r = py
            .detach(|| collapse_scan(&self.0, space, tol, seed, budget))
            .map_err(err)?;
        to_py(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("Functional({})", self.0.name())
    }
}

#[pyclass(module = "lawprice", frozen)]
struct AcceptanceSet(core::AcceptanceSet);

#[pymethods]
impl AcceptanceSet {
    #[staticmethod]
    fn nonnegative_mean() -> Self {
        Self(core::AcceptanceSet::nonnegative_mean())
    }

    #[staticmethod]
    fn expected_shortfall(beta: f64) -> PyResult<Self> {
        core::AcceptanceSet::expected_shortfall(beta).map(Self).map_err(err)
    }

    #[staticmethod]
    fn risk_free() -> Self {
        Self(core::AcceptanceSet::risk_free())
    }

    #[staticmethod]
    #[pyo3(signature = (level = 1.0))]
    fn bounded_shortfall(level: f64) -> PyResult<Self> {
        core::AcceptanceSet::bounded_shortfall(level).map(Self).map_err(err)
    }

    #[staticmethod]
    fn atom_weighted(weights: Vec<f64>) -> PyResult<Self> {
        core::AcceptanceSet::atom_weighted(weights).map(Self).map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn flags(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.flags())
    }

    fn __contains__(&self, values: Vec<f64>) -> PyResult<bool> {
        self.0.contains(&payoff(values)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("AcceptanceSet({})", self.0.name())
    }
}

/// Traded payoffs with their prices; `basis[numeraire_index]` must be
/// nonnegative and nonzero.
#[pyclass(module = "lawprice", frozen)]
struct Market(core::Market);

#[pymethods]
impl Market {
    #[new]
    #[pyo3(signature = (basis, prices, numeraire_index = 0))]
    fn new(basis: Vec<Vec<f64>>, prices: Vec<f64>, numeraire_index: usize) -> PyResult<Self> {
        let basis = basis.into_iter().map(payoff).collect::<PyResult<Vec<_>>>()?;
        core::Market::new(basis, prices, numeraire_index).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, price = 1.0))]
    fn cash(n: usize, price: f64) -> PyResult<Self> {
        let space = AtomSpace::new(n).map_err(err)?;
        core::Market::cash(space, price).map(Self).map_err(err)
    }

    /// Cheapest cost of making `values` acceptable; returns the solver report.
    #[pyo3(signature = (acceptance, values, tol = 1e-9))]
    fn risk(&self, py: Python<'_>, acceptance: &AcceptanceSet, values: Vec<f64>, tol: f64) -> PyResult<Py<PyAny>> {
        let x = payoff(values)?;
        let r = py.detach(|| risk_measure(&acceptance.0, &self.0, &x, tol)).map_err(err)?;
        to_py(py, &r)
    }

    /// A pair of equally distributed payoffs with different capital, if found.
    #[pyo3(signature = (acceptance, trials = 1000, seed = 0, tol = 1e-6))]
    fn law_invariance_witness(
        &self,
        py: Python<'_>,
        acceptance: &AcceptanceSet,
        trials: usize,
        seed: u64,
        tol: f64,
    ) -> PyResult<Py<PyAny>> {
        let w = py
            .detach(|| law_invariance_witness(&acceptance.0, &self.0, trials, seed, tol))
            .map_err(err)?;
        to_py(py, &w)
    }

    #[getter]
    fn prices(&self) -> Vec<f64> {
        self.0.prices().to_vec()
    }
}

/// Sorted-product bound on E[XY] over all couplings.
#[pyfunction]
fn hardy_littlewood(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    hl_product(&payoff(x)?, &payoff(y)?).map_err(err)
}

/// Whether x dominates y in convex order.
#[pyfunction]
#[pyo3(signature = (x, y, tol = 1e-12))]
fn convex_order(x: Vec<f64>, y: Vec<f64>, tol: f64) -> PyResult<bool> {
    convex_order_geq(&payoff(x)?, &payoff(y)?, tol).map_err(err)
}

fn young(spec: &str) -> PyResult<core::YoungFunction> {
    match spec {
        "exp" => Ok(core::YoungFunction::Exp),
        "inf" | "linf" => Ok(core::YoungFunction::Linf),
        p => {
            let p: f64 = p
                .parse()
                .map_err(|_| LawpriceError::new_err(format!("unknown Young function {spec:?}")))?;
            core::YoungFunction::power(p).map_err(err)
        }
    }
}

/// Luxemburg norm under Φ given as a power ("2"), "exp" or "inf".
#[pyfunction]
#[pyo3(signature = (phi, values, tol = 1e-12))]
fn luxemburg(phi: &str, values: Vec<f64>, tol: f64) -> PyResult<f64> {
    luxemburg_norm(&young(phi)?, &payoff(values)?, tol).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (phi, t_min = 0.01, t_max = 50.0, grid_size = 60))]
fn delta2(py: Python<'_>, phi: &str, t_min: f64, t_max: f64, grid_size: usize) -> PyResult<Py<PyAny>> {
    let r = delta2_check(&young(phi)?, t_min, t_max, grid_size).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
fn lawprice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LawpriceError", m.py().get_type::<LawpriceError>())?;
    m.add_class::<Functional>()?;
    m.add_class::<AcceptanceSet>()?;
    m.add_class::<Market>()?;
    m.add_function(wrap_pyfunction!(hardy_littlewood, m)?)?;
    m.add_function(wrap_pyfunction!(convex_order, m)?)?;
    m.add_function(wrap_pyfunction!(luxemburg, m)?)?;
    m.add_function(wrap_pyfunction!(delta2, m)?)?;
    Ok(())
}
