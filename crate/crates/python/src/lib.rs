//! Python bindings for `kelly-tails`.
//!
//! Results come back as plain dicts and lists; a return model is exposed as
//! the `Model` class.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kelly_tails::frontier::{self, FrontierPoint, FrontierSpec};
use kelly_tails::parity;
use kelly_tails::single::{self, SweepMode};
use kelly_tails::{estimate, model, simulate, DiscreteModel, GaussianCore, KellyError, TailSpec};

create_exception!(
    kelly_tails,
    InfeasibleError,
    PyValueError,
    "Valid inputs describing an infeasible model."
);

fn to_py(e: KellyError) -> PyErr {
    match e {
        KellyError::Io(m) => PyOSError::new_err(m),
        KellyError::InvalidParameter(_)
        | KellyError::InvalidJoint(_)
        | KellyError::SeriesTooShort { .. }
        | KellyError::Parse { .. }
        | KellyError::EmptyFile => PyValueError::new_err(e.to_string()),
        _ => InfeasibleError::new_err(e.to_string()),
    }
}

type KResult<T> = std::result::Result<T, KellyError>;

fn lift<T>(r: KResult<T>) -> PyResult<T> {
    r.map_err(to_py)
}

fn parts(mu: f64, sigma: f64, alpha: f64, etl: f64, beta: f64, etw: f64) -> PyResult<(GaussianCore, TailSpec)> {
    Ok((
        lift(GaussianCore::new(mu, sigma))?,
        lift(TailSpec::new(alpha, etl, beta, etw))?,
    ))
}

/// Discrete return model: a Gaussian core `mu +- sigma` plus tail outcomes.
#[pyclass(name = "Model", module = "kelly_tails", frozen, skip_from_py_object)]
struct PyModel {
    inner: DiscreteModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (mu, sigma, alpha=0.0, etl=0.0, beta=0.0, etw=0.0))]
    fn new(mu: f64, sigma: f64, alpha: f64, etl: f64, beta: f64, etw: f64) -> PyResult<Self> {
        let (core, tails) = parts(mu, sigma, alpha, etl, beta, etw)?;
        Ok(Self {
            inner: model::build_discrete_model(&core, &tails),
        })
    }

    /// Model from explicit `(value, probability)` pairs.
    #[staticmethod]
    fn from_outcomes(outcomes: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self {
            inner: lift(DiscreteModel::from_outcomes(outcomes))?,
        })
    }

    fn outcomes(&self) -> Vec<(f64, f64)> {
        self.inner.outcomes().iter().map(|o| (o.value, o.probability)).collect()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    fn feasible_interval(&self) -> (f64, f64) {
        self.inner.feasible_interval()
    }

    /// Expected log growth at leverage `f`.
    fn growth(&self, f: f64) -> PyResult<f64> {
        lift(single::growth_at(&self.inner, f))
    }

    /// Exact growth-optimal `(fraction, growth)`.
    fn kelly(&self) -> PyResult<(f64, f64)> {
        let k = lift(single::kelly_fat_exact(&self.inner))?;
        Ok((k.fraction, k.growth))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Model(outcomes={:?})", self.outcomes())
    }
}

/// Gaussian-limit `(fraction, growth)`.
#[pyfunction]
fn kelly_simple(mu: f64, sigma: f64) -> PyResult<(f64, f64)> {
    let k = single::kelly_simple(&lift(GaussianCore::new(mu, sigma))?);
    Ok((k.fraction, k.growth))
}

/// Binary bet fraction for win probability `p` and odds `b`.
#[pyfunction]
fn kelly_binary(p: f64, b: f64) -> PyResult<f64> {
    lift(single::kelly_binary(p, b))
}

/// Closed-form fat-tail `(fraction, growth)`.
#[pyfunction]
#[pyo3(signature = (mu, sigma, alpha=0.0, etl=0.0, beta=0.0, etw=0.0))]
fn kelly_fat_closed(mu: f64, sigma: f64, alpha: f64, etl: f64, beta: f64, etw: f64) -> PyResult<(f64, f64)> {
    let (core, tails) = parts(mu, sigma, alpha, etl, beta, etw)?;
    let k = single::kelly_fat_closed(&core, &tails);
    Ok((k.fraction, k.growth))
}

/// Exact fat-tail `(fraction, growth)` on the four-point model.
#[pyfunction]
#[pyo3(signature = (mu, sigma, alpha=0.0, etl=0.0, beta=0.0, etw=0.0))]
fn kelly_fat_exact(mu: f64, sigma: f64, alpha: f64, etl: f64, beta: f64, etw: f64) -> PyResult<(f64, f64)> {
    PyModel::new(mu, sigma, alpha, etl, beta, etw)?.kelly()
}

/// Core `(mu, sigma)` that keeps observed moments `(mu0, sigma0)` once the
/// tails are added.
#[pyfunction]
#[pyo3(signature = (mu0, sigma0, alpha, etl, beta=0.0, etw=0.0))]
fn calibrate_center(mu0: f64, sigma0: f64, alpha: f64, etl: f64, beta: f64, etw: f64) -> PyResult<(f64, f64)> {
    let tails = lift(TailSpec::new(alpha, etl, beta, etw))?;
    let core = lift(model::calibrate_center_two_sided(mu0, sigma0, &tails))?;
    Ok((core.mu(), core.sigma()))
}

/// Rows of `(etl, f_closed, f_exact, g_closed, g_exact)`; `None` where the
/// point is infeasible. `mode` is `"fixed"` or `"recalibrated"`.
#[pyfunction]
#[pyo3(signature = (mu0, sigma0, alpha, etl_grid, mode="fixed"))]
#[allow(clippy::type_complexity)]
fn etl_sweep(
    mu0: f64,
    sigma0: f64,
    alpha: f64,
    etl_grid: Vec<f64>,
    mode: &str,
) -> PyResult<Vec<(f64, Option<(f64, f64, f64, f64)>)>> {
    let mode = match mode {
        "fixed" => SweepMode::FixedCenter,
        "recalibrated" => SweepMode::Recalibrated,
        other => return Err(PyValueError::new_err(format!("unknown sweep mode '{other}'"))),
    };
    Ok(single::etl_sweep(mu0, sigma0, alpha, &etl_grid, mode)
        .into_iter()
        .map(|r| {
            (
                r.etl,
                r.point.ok().map(|p| (p.f_closed, p.f_exact, p.g_closed, p.g_exact)),
            )
        })
        .collect())
}

/// `(multiple, growth_rate)` of compounding `count` bets of each outcome.
#[pyfunction]
fn scenario_growth(spec: Vec<(u64, f64)>, f: f64) -> PyResult<(f64, f64)> {
    let r = lift(single::scenario_growth(&spec, f))?;
    Ok((r.multiple, r.growth_rate))
}

fn portfolio(premiums: Vec<f64>, covariance: Vec<f64>) -> PyResult<parity::PortfolioSpec> {
    lift(parity::PortfolioSpec::new(premiums, covariance))
}

/// Kelly allocation `C^-1 M`; `covariance` is row-major.
#[pyfunction]
fn kelly_allocation<'py>(py: Python<'py>, premiums: Vec<f64>, covariance: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let a = lift(parity::kelly_allocation(&portfolio(premiums, covariance)?))?;
    let d = PyDict::new(py);
    d.set_item("fractions", a.fractions)?;
    d.set_item("total_leverage", a.total_leverage)?;
    d.set_item("growth_rate", a.growth_rate)?;
    Ok(d)
}

#[pyfunction]
fn max_sharpe_tangency(premiums: Vec<f64>, covariance: Vec<f64>) -> PyResult<Vec<f64>> {
    lift(parity::max_sharpe_tangency(&portfolio(premiums, covariance)?))
}

#[pyfunction]
fn risk_parity_weights(sigmas: Vec<f64>) -> PyResult<Vec<f64>> {
    lift(parity::risk_parity_weights(&sigmas))
}

/// Exact two-asset allocation with joint tails. Each asset is
/// `(mu, sigma, alpha, etl, beta, etw)`; `alignment` is `"coaligned"`,
/// `"opposed"` or `"independent"`.
#[pyfunction]
#[pyo3(signature = (asset1, asset2, rho, alignment, joint_alpha=0.0))]
fn joint_allocation<'py>(
    py: Python<'py>,
    asset1: (f64, f64, f64, f64, f64, f64),
    asset2: (f64, f64, f64, f64, f64, f64),
    rho: f64,
    alignment: &str,
    joint_alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let asset = |a: (f64, f64, f64, f64, f64, f64)| -> PyResult<parity::AssetModel> {
        let (core, tails) = parts(a.0, a.1, a.2, a.3, a.4, a.5)?;
        Ok(parity::AssetModel { core, tails })
    };
    let alignment = match alignment {
        "coaligned" => parity::JointAlignment::Coaligned,
        "opposed" => parity::JointAlignment::Opposed,
        "independent" => parity::JointAlignment::Independent,
        other => return Err(PyValueError::new_err(format!("unknown alignment '{other}'"))),
    };
    let m = lift(parity::JointTwoAssetModel::new(
        asset(asset1)?,
        asset(asset2)?,
        rho,
        alignment,
        joint_alpha,
    ))?;
    let a = lift(parity::joint_fat_allocation(&m))?;
    let d = PyDict::new(py);
    d.set_item("fractions", a.fractions)?;
    d.set_item("total_leverage", a.total_leverage)?;
    d.set_item("growth_rate", a.growth_rate)?;
    Ok(d)
}

/// Seeded Monte Carlo of wealth paths at constant leverage.
#[pyfunction]
#[pyo3(signature = (model, leverage, n_paths, n_periods, seed=0, ruin_floor=simulate::DEFAULT_RUIN_FLOOR))]
fn simulate_paths<'py>(
    py: Python<'py>,
    model: &PyModel,
    leverage: f64,
    n_paths: usize,
    n_periods: usize,
    seed: u64,
    ruin_floor: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = simulate::SimConfig::new(seed, n_paths, n_periods, leverage).with_ruin_floor(ruin_floor);
    let inner = model.inner.clone();
    let s = py
        .detach(move || simulate::simulate_paths(&inner, &cfg))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("mean_log_growth", s.mean_log_growth)?;
    d.set_item("se_log_growth", s.se_log_growth)?;
    d.set_item("median_terminal", s.median_terminal)?;
    d.set_item("mean_terminal", s.mean_terminal)?;
    d.set_item("se_terminal", s.se_terminal)?;
    d.set_item("ruin_fraction", s.ruin_fraction)?;
    let q: Vec<(f64, f64)> = s.max_drawdown_quantiles.iter().map(|q| (q.quantile, q.value)).collect();
    d.set_item("max_drawdown_quantiles", q)?;
    Ok(d)
}

/// Cost of protecting wealth at `1 - drawdown` after `horizon` periods.
#[pyfunction]
fn ddva(py: Python<'_>, model: &PyModel, leverage: f64, drawdown: f64, horizon: usize) -> PyResult<(f64, f64)> {
    let inner = model.inner.clone();
    let q = py
        .detach(move || frontier::ddva(&inner, leverage, drawdown, horizon))
        .map_err(to_py)?;
    Ok((q.cost, q.std_error))
}

fn point_dict<'py>(py: Python<'py>, p: &FrontierPoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("leverage", p.leverage)?;
    d.set_item("volatility", p.volatility)?;
    d.set_item("gross_return", p.gross_return)?;
    d.set_item("protection_cost", p.protection_cost)?;
    d.set_item("financing_cost", p.financing_cost)?;
    d.set_item("net_return", p.net_return)?;
    Ok(d)
}

/// Protected frontier points over `leverage_grid`; `None` for infeasible
/// leverages.
#[pyfunction]
#[pyo3(signature = (mu0, sigma0, leverage_grid, alpha=0.0, etl=0.0, beta=0.0, etw=0.0, drawdown=0.1, horizon=1, spread=0.0))]
#[allow(clippy::too_many_arguments)]
fn frontier_curve<'py>(
    py: Python<'py>,
    mu0: f64,
    sigma0: f64,
    leverage_grid: Vec<f64>,
    alpha: f64,
    etl: f64,
    beta: f64,
    etw: f64,
    drawdown: f64,
    horizon: usize,
    spread: f64,
) -> PyResult<Vec<Option<Bound<'py, PyDict>>>> {
    let spec = FrontierSpec {
        mu0,
        sigma0,
        tails: lift(TailSpec::new(alpha, etl, beta, etw))?,
        drawdown,
        horizon,
        spread,
        leverage_grid,
    };
    let rows = py.detach(move || frontier::frontier_curve(&spec)).map_err(to_py)?;
    rows.iter()
        .map(|r| r.point.as_ref().ok().map(|p| point_dict(py, p)).transpose())
        .collect()
}

fn estimate_dict<'py>(py: Python<'py>, e: &estimate::Estimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mu", e.core.mu())?;
    d.set_item("sigma", e.core.sigma())?;
    d.set_item("alpha", e.tails.alpha())?;
    d.set_item("etl", e.tails.etl())?;
    d.set_item("beta", e.tails.beta())?;
    d.set_item("etw", e.tails.etw())?;
    d.set_item("n_observations", e.diagnostics.n_observations)?;
    d.set_item("n_left", e.diagnostics.n_left)?;
    d.set_item("n_right", e.diagnostics.n_right)?;
    d.set_item("sample_mean", e.diagnostics.sample_mean)?;
    d.set_item("sample_std", e.diagnostics.sample_std)?;
    d.set_item("degenerate_left", e.diagnostics.degenerate_left)?;
    d.set_item("degenerate_right", e.diagnostics.degenerate_right)?;
    Ok(d)
}

/// Fits the four-point model to a return series.
#[pyfunction]
#[pyo3(signature = (returns, q=estimate::DEFAULT_TAIL_QUANTILE))]
fn estimate_params<'py>(py: Python<'py>, returns: Vec<f64>, q: f64) -> PyResult<Bound<'py, PyDict>> {
    let series = lift(estimate::ReturnSeries::new(returns, "period"))?;
    estimate_dict(py, &lift(estimate::estimate_params(&series, q))?)
}

#[pyfunction]
fn read_returns_csv(path: std::path::PathBuf) -> PyResult<Vec<f64>> {
    Ok(lift(estimate::read_returns_csv(path))?.values().to_vec())
}

#[pymodule]
#[pyo3(name = "kelly_tails")]
pub fn kelly_tails_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(kelly_simple, m)?)?;
    m.add_function(wrap_pyfunction!(kelly_binary, m)?)?;
    m.add_function(wrap_pyfunction!(kelly_fat_closed, m)?)?;
    m.add_function(wrap_pyfunction!(kelly_fat_exact, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_center, m)?)?;
    m.add_function(wrap_pyfunction!(etl_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_growth, m)?)?;
    m.add_function(wrap_pyfunction!(kelly_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(max_sharpe_tangency, m)?)?;
    m.add_function(wrap_pyfunction!(risk_parity_weights, m)?)?;
    m.add_function(wrap_pyfunction!(joint_allocation, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_paths, m)?)?;
    m.add_function(wrap_pyfunction!(ddva, m)?)?;
    m.add_function(wrap_pyfunction!(frontier_curve, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_params, m)?)?;
    m.add_function(wrap_pyfunction!(read_returns_csv, m)?)?;
    Ok(())
}
