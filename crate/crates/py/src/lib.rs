//! Python bindings. Parameter objects are thin wrappers over the core
//! types; structured results come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use reserve_insure as core;
use reserve_insure::network::NetworkCase;
use reserve_insure::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Data(_) | Error::Precondition(_) | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Serializes a result and hands it to `json.loads`.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "StorageParams", from_py_object)]
#[derive(Clone)]
pub struct PyStorageParams(core::StorageParams);

#[pymethods]
impl PyStorageParams {
    #[new]
    #[pyo3(signature = (e_max, cost_coeff, p_max=None, alpha=1.0, eta_plus=1.0, eta_minus=1.0, x0=0.0))]
    fn new(
        e_max: f64,
        cost_coeff: f64,
        p_max: Option<f64>,
        alpha: f64,
        eta_plus: f64,
        eta_minus: f64,
        x0: f64,
    ) -> PyResult<Self> {
        let p = core::StorageParams {
            e_max,
            p_max,
            alpha,
            eta_plus,
            eta_minus,
            x0,
            cost_coeff,
        };
        p.validate().map_err(py_err)?;
        Ok(Self(p))
    }

    #[getter]
    fn e_max(&self) -> f64 {
        self.0.e_max
    }

    #[getter]
    fn cost_coeff(&self) -> f64 {
        self.0.cost_coeff
    }

    fn __repr__(&self) -> String {
        format!("StorageParams(e_max={}, cost_coeff={})", self.0.e_max, self.0.cost_coeff)
    }
}

#[pyclass(name = "RenewableModel", from_py_object)]
#[derive(Clone)]
pub struct PyRenewableModel(core::RenewableModel);

#[pymethods]
impl PyRenewableModel {
    /// `mu` and `sigma` per slot (MW); `capacity` bounds sampled output.
    #[new]
    fn new(mu: Vec<f64>, sigma: Vec<f64>, capacity: f64) -> PyResult<Self> {
        if mu.len() != sigma.len() {
            return Err(PyValueError::new_err("mu and sigma must have the same length"));
        }
        let slots = mu
            .into_iter()
            .zip(sigma)
            .map(|(mu, sigma)| core::SlotGaussian { mu, sigma })
            .collect();
        Ok(Self(core::RenewableModel::new(slots, capacity).map_err(py_err)?))
    }

    /// Fits one Gaussian per slot from `samples[slot]`.
    #[staticmethod]
    #[pyo3(signature = (samples, capacity=None))]
    fn fit(samples: Vec<Vec<f64>>, capacity: Option<f64>) -> PyResult<Self> {
        Ok(Self(core::fit_hourly_gaussian(&samples, capacity).map_err(py_err)?.model))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn cdf(&self, k: usize, x: f64) -> PyResult<f64> {
        self.slot(k)?;
        Ok(self.0.cdf(k, x))
    }

    fn expected_shortfall(&self, k: usize, c: f64) -> PyResult<f64> {
        self.slot(k)?;
        Ok(self.0.expected_shortfall(k, c))
    }

    fn expected_capped_cost(&self, k: usize, c: f64, cap: f64, cost: f64) -> PyResult<f64> {
        self.slot(k)?;
        self.0.expected_capped_cost(k, c, cap, cost).map_err(py_err)
    }

    /// One day of output, reproducible from `(seed, stream)`.
    #[pyo3(signature = (seed, stream, clipped=true))]
    fn scenario(&self, seed: u64, stream: u64, clipped: bool) -> Vec<f64> {
        self.0.scenario(seed, stream, clipped).r
    }
}

impl PyRenewableModel {
    fn slot(&self, k: usize) -> PyResult<()> {
        if k < self.0.len() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("slot {k} out of range")))
        }
    }
}

#[pyclass(name = "MarketPrices", from_py_object)]
#[derive(Clone)]
pub struct PyMarketPrices(core::MarketPrices);

#[pymethods]
impl PyMarketPrices {
    /// Give either an absolute `penalty` or a `penalty_ratio`
    /// (penalty = max price / ratio, default ratio 0.4).
    #[new]
    #[pyo3(signature = (lambda_, penalty=None, penalty_ratio=None))]
    fn new(lambda_: Vec<f64>, penalty: Option<f64>, penalty_ratio: Option<f64>) -> PyResult<Self> {
        let p = match (penalty, penalty_ratio) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give penalty or penalty_ratio, not both")),
            (Some(p), None) => core::MarketPrices::new(lambda_, p),
            (None, r) => core::MarketPrices::with_penalty_ratio(lambda_, r.unwrap_or(0.4)),
        };
        Ok(Self(p.map_err(py_err)?))
    }

    #[getter]
    fn lambda_(&self) -> Vec<f64> {
        self.0.lambda.clone()
    }

    #[getter]
    fn penalty(&self) -> f64 {
        self.0.lambda_p
    }
}

#[pyclass(name = "Contract", from_py_object)]
#[derive(Clone)]
pub struct PyContract(core::Contract);

#[pymethods]
impl PyContract {
    #[new]
    fn new(pi: Vec<f64>, g: Vec<f64>) -> PyResult<Self> {
        let ct = core::Contract { pi, g };
        ct.validate(ct.pi.len()).map_err(py_err)?;
        Ok(Self(ct))
    }

    #[getter]
    fn pi(&self) -> Vec<f64> {
        self.0.pi.clone()
    }

    #[getter]
    fn g(&self) -> Vec<f64> {
        self.0.g.clone()
    }

    fn premium(&self) -> f64 {
        self.0.premium()
    }
}

/// Optimal day-ahead commitments given reserves `g` (zeros if omitted).
#[pyfunction]
#[pyo3(signature = (prices, model, g=None))]
fn optimal_bid(prices: &PyMarketPrices, model: &PyRenewableModel, g: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
    let g = g.unwrap_or_else(|| vec![0.0; prices.0.len()]);
    core::optimal_bid(&prices.0, &model.0, &g).map_err(py_err)
}

/// Reserve price interval `{floor, cap, slot, charge_slot, reserve, commitment}`.
#[pyfunction]
fn feasibility_interval(
    py: Python<'_>,
    prices: &PyMarketPrices,
    model: &PyRenewableModel,
    storage: &PyStorageParams,
) -> PyResult<Py<PyAny>> {
    let fi = core::feasibility_interval(&prices.0, &model.0, &storage.0).map_err(py_err)?;
    to_py(py, &fi)
}

#[pyfunction]
fn standard_contract(prices: &PyMarketPrices, model: &PyRenewableModel, storage: &PyStorageParams) -> PyResult<PyContract> {
    Ok(PyContract(
        core::standard_contract(&prices.0, &model.0, &storage.0).map_err(py_err)?,
    ))
}

#[pyfunction]
fn profitability_classify(
    py: Python<'_>,
    prices: &PyMarketPrices,
    model: &PyRenewableModel,
    storage: &PyStorageParams,
    pi: f64,
) -> PyResult<Py<PyAny>> {
    let b = core::profitability_classify(&prices.0, &model.0, &storage.0, pi).map_err(py_err)?;
    to_py(py, &b)
}

#[pyfunction]
#[pyo3(signature = (prices, model, slot, g, pi_e, pi_r=0.0))]
fn two_way_commitment(
    py: Python<'_>,
    prices: &PyMarketPrices,
    model: &PyRenewableModel,
    slot: usize,
    g: f64,
    pi_e: f64,
    pi_r: f64,
) -> PyResult<Py<PyAny>> {
    let b = core::two_way_commitment(&prices.0, &model.0, slot, g, pi_e, pi_r).map_err(py_err)?;
    to_py(py, &b)
}

/// Optimal arbitrage schedule `{u_plus, u_minus}`.
#[pyfunction]
fn arbitrage_policy(py: Python<'_>, prices: &PyMarketPrices, storage: &PyStorageParams) -> PyResult<Py<PyAny>> {
    let p = core::arbitrage_policy(&prices.0, &storage.0).map_err(py_err)?;
    to_py(py, &p)
}

/// Expected profits of both players with and without a contract.
#[pyfunction]
#[pyo3(signature = (prices, model, storage, contract=None))]
fn expected_profits<'py>(
    py: Python<'py>,
    prices: &PyMarketPrices,
    model: &PyRenewableModel,
    storage: &PyStorageParams,
    contract: Option<&PyContract>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = prices.0.len();
    let ct = contract.map_or_else(|| core::Contract::none(n), |c| c.0.clone());
    let commit = core::optimal_bid(&prices.0, &model.0, &ct.g).map_err(py_err)?;
    let policy = core::storage::single_cycle_policy(&prices.0.lambda, &storage.0).map_err(py_err)?;
    let ren = core::renewable_expected_profit(&commit, &ct, &prices.0, &model.0).map_err(py_err)?;
    let sto = core::storage_expected_profit(&policy, Some(&ct), &commit, &prices.0, &model.0, &storage.0)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("renewable", ren)?;
    d.set_item("storage", sto)?;
    d.set_item("commitments", commit)?;
    Ok(d)
}

/// Settles one sampled day; returns both players' ledgers.
#[pyfunction]
#[pyo3(signature = (prices, model, storage, seed, stream, contract=None, pi_e=None))]
#[allow(clippy::too_many_arguments)]
fn settle_scenario(
    py: Python<'_>,
    prices: &PyMarketPrices,
    model: &PyRenewableModel,
    storage: &PyStorageParams,
    seed: u64,
    stream: u64,
    contract: Option<&PyContract>,
    pi_e: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let g = contract.map_or_else(|| vec![0.0; prices.0.len()], |c| c.0.g.clone());
    let commit = core::optimal_bid(&prices.0, &model.0, &g).map_err(py_err)?;
    let policy = core::storage::single_cycle_policy(&prices.0.lambda, &storage.0).map_err(py_err)?;
    let scn = model.0.scenario(seed, stream, true);
    let r = core::settle_realized(&scn, &commit, contract.map(|c| &c.0), &policy, &prices.0, &storage.0, pi_e)
        .map_err(py_err)?;
    to_py(py, &r)
}

fn load_case(case_json: Option<&str>, line_scale: Option<f64>) -> PyResult<NetworkCase> {
    let case = match case_json {
        Some(s) => NetworkCase::from_json(s).map_err(py_err)?,
        None => NetworkCase::ieee14_modified(),
    };
    Ok(match line_scale {
        Some(f) => case.with_line_scale(f),
        None => case,
    })
}

/// DC dispatch of a network case (JSON text; the built-in 14-bus case if
/// omitted). Returns generation, flows, LMPs and the storage schedule.
#[pyfunction]
#[pyo3(signature = (case_json=None, line_scale=None))]
fn network_dispatch(py: Python<'_>, case_json: Option<&str>, line_scale: Option<f64>) -> PyResult<Py<PyAny>> {
    let case = load_case(case_json, line_scale)?;
    let r = py
        .detach(|| core::multi_period_dispatch(&case))
        .map_err(py_err)?;
    to_py(py, &r)
}

/// Contract feasibility for every wind/storage bus placement.
#[pyfunction]
#[pyo3(signature = (case_json=None, lambda_ratio=0.4))]
fn feasibility_matrix(py: Python<'_>, case_json: Option<&str>, lambda_ratio: f64) -> PyResult<Py<PyAny>> {
    let case = load_case(case_json, None)?;
    let m = py
        .detach(|| core::feasibility_matrix(&case, lambda_ratio))
        .map_err(py_err)?;
    to_py(py, &m)
}

#[pymodule]
fn reserve_insure_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStorageParams>()?;
    m.add_class::<PyRenewableModel>()?;
    m.add_class::<PyMarketPrices>()?;
    m.add_class::<PyContract>()?;
    m.add_function(wrap_pyfunction!(optimal_bid, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_interval, m)?)?;
    m.add_function(wrap_pyfunction!(standard_contract, m)?)?;
    m.add_function(wrap_pyfunction!(profitability_classify, m)?)?;
    m.add_function(wrap_pyfunction!(two_way_commitment, m)?)?;
    m.add_function(wrap_pyfunction!(arbitrage_policy, m)?)?;
    m.add_function(wrap_pyfunction!(expected_profits, m)?)?;
    m.add_function(wrap_pyfunction!(settle_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(network_dispatch, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_matrix, m)?)?;
    Ok(())
}
