//! Python bindings: menus, distributions, training, the LP baseline and
//! duality certificates.

use menunet::config::ExperimentConfig;
use menunet::trainer::TraceRow;
use menunet::{duality, evaluator, lp, oracles, trainer, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument { .. }
        | Error::Config(_)
        | Error::DimensionMismatch { .. }
        | Error::LpTooLarge { .. }
        | Error::Unsupported(_)
        | Error::NoReference(_)
        | Error::Json(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A menu; item 0 is always the exit item `[(0, 0), 0]`.
#[pyclass(name = "Menu", module = "menunet_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyMenu {
    inner: menunet::Menu,
}

#[pymethods]
impl PyMenu {
    /// Build from `[(allocation, price), ...]` without the exit item.
    #[new]
    fn new(items: Vec<(Vec<f64>, f64)>) -> PyResult<Self> {
        let m = items.first().map_or(2, |(x, _)| x.len());
        let items = items.into_iter().map(|(x, p)| menunet::MenuItem::new(x, p)).collect();
        Ok(Self {
            inner: menunet::Menu::with_exit(m, items).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: menunet::Menu::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    /// `[(allocation, price), ...]` including the exit item.
    fn items(&self) -> Vec<(Vec<f64>, f64)> {
        self.inner
            .items()
            .iter()
            .map(|it| (it.allocation.clone(), it.price))
            .collect()
    }

    /// Index chosen by the argmax buyer with values `v`.
    #[pyo3(signature = (v, valuation = "additive"))]
    fn choose(&self, v: Vec<f64>, valuation: &str) -> PyResult<usize> {
        if v.len() != self.inner.dim() {
            return Err(PyValueError::new_err("value vector has the wrong dimension"));
        }
        Ok(menunet::hard_response(&self.inner, &v, parse_kind(valuation)?))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Menu({:?})", self.items())
    }
}

/// A value distribution.
#[pyclass(name = "Distribution", module = "menunet_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDistribution {
    inner: menunet::DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    /// Uniform on `[0, c1] × [0, c2]`.
    #[staticmethod]
    fn uniform_rect(c1: f64, c2: f64) -> PyResult<Self> {
        let inner = menunet::DistributionSpec::uniform_rect(c1, c2);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Uniform on `{v ≥ 0 : v1/c + v2 ≤ 1}`.
    #[staticmethod]
    fn uniform_triangle(c: f64) -> PyResult<Self> {
        let inner = menunet::DistributionSpec::uniform_triangle(c);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: menunet::DistributionSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Grid points and masses: `([[v1, v2], ...], [mass, ...])`.
    fn grid(&self, n: usize) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
        let grid = menunet::make_grid(&self.inner, n).map_err(to_py)?;
        let points = grid.iter().map(|(v, _)| v.to_vec()).collect();
        Ok((points, grid.masses().to_vec()))
    }

    fn __repr__(&self) -> String {
        format!("Distribution({})", self.inner.label())
    }
}

fn parse_kind(name: &str) -> PyResult<menunet::ValuationKind> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown valuation `{name}`")))
}

/// Result of a training run.
#[pyclass(name = "TrainResult", module = "menunet_py", frozen, get_all)]
pub struct PyTrainResult {
    menu: PyMenu,
    /// Exact revenue when available, otherwise hard-buyer grid revenue.
    revenue: f64,
    restart: usize,
    restart_revenues: Vec<f64>,
    /// `(iteration, lambda, soft_revenue, exact_revenue)` rows.
    trace: Vec<(usize, f64, f64, f64)>,
}

fn trace_rows(trace: &[TraceRow]) -> Vec<(usize, f64, f64, f64)> {
    trace.iter().map(|r| (r.iteration, r.lambda, r.soft_rev, r.exact_rev)).collect()
}

/// Exact revenue of `menu` under `dist` (additive buyer).
#[pyfunction]
fn exact_revenue(menu: &PyMenu, dist: &PyDistribution) -> PyResult<f64> {
    evaluator::exact_revenue(&menu.inner, &dist.inner).map_err(to_py)
}

/// Hard-buyer revenue of `menu` on the `n × n` grid of `dist`.
#[pyfunction]
#[pyo3(signature = (menu, dist, n, valuation = "additive"))]
fn grid_revenue(menu: &PyMenu, dist: &PyDistribution, n: usize, valuation: &str) -> PyResult<f64> {
    let grid = menunet::make_grid(&dist.inner, n).map_err(to_py)?;
    evaluator::grid_revenue(&menu.inner, &grid, parse_kind(valuation)?).map_err(to_py)
}

/// Train with a TOML experiment config (same format as the command line).
#[pyfunction]
fn train(py: Python<'_>, config_toml: &str) -> PyResult<PyTrainResult> {
    let cfg = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    let out = py
        .detach(|| trainer::train(&cfg.distribution, cfg.valuation, &cfg.train))
        .map_err(to_py)?;
    Ok(PyTrainResult {
        menu: PyMenu { inner: out.menu },
        revenue: out.revenue,
        restart: out.restart,
        restart_revenues: out.restart_revenues,
        trace: trace_rows(&out.trace),
    })
}

/// Solve the direct-mechanism LP on the `n × n` grid. Returns a dict with
/// `objective`, `menu`, `max_ic_violation`, `max_ir_violation`.
#[pyfunction]
fn solve_lp<'py>(py: Python<'py>, dist: &PyDistribution, n: usize) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let spec = dist.inner.clone();
    let (sol, audit, menu) = py
        .detach(|| -> menunet::Result<_> {
            let sol = lp::solve_grid(&menunet::make_grid(&spec, n)?)?;
            let audit = lp::audit(&sol.mechanism);
            let menu = lp::menu_from_direct(&sol.mechanism)?;
            Ok((sol, audit, menu))
        })
        .map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("objective", sol.objective)?;
    out.set_item("menu", PyMenu { inner: menu })?;
    out.set_item("max_ic_violation", audit.max_ic_violation)?;
    out.set_item("max_ir_violation", audit.max_ir_violation)?;
    Ok(out)
}

/// Known optimal menu and revenue for the uniform triangle with parameter `c`.
#[pyfunction]
fn optimal_triangle(c: f64) -> PyResult<(PyMenu, f64)> {
    let r = oracles::optimal_triangle(c).map_err(to_py)?;
    let menu = r.menu.expect("triangle optimum has a menu");
    Ok((PyMenu { inner: menu }, r.opt_revenue))
}

/// Duality certificate as a JSON string; defaults to the optimal menu.
#[pyfunction]
#[pyo3(signature = (c, menu = None, quad_n = duality::DEFAULT_QUAD_N, tol = duality::DEFAULT_TOL))]
fn certify(py: Python<'_>, c: f64, menu: Option<&PyMenu>, quad_n: usize, tol: f64) -> PyResult<String> {
    let menu = match menu {
        Some(m) => m.inner.clone(),
        None => oracles::optimal_triangle(c).map_err(to_py)?.menu.expect("triangle optimum has a menu"),
    };
    let cert = py.detach(|| duality::certify(&menu, c, quad_n, tol)).map_err(to_py)?;
    cert.to_json().map_err(to_py)
}

#[pymodule]
pub fn menunet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMenu>()?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_function(wrap_pyfunction!(exact_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(grid_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lp, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_triangle, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    Ok(())
}
