//! Python bindings.
//!
//! Orders are passed as `(p, q, P, Q, S)` tuples and parameters as flat
//! lists in the order `beta, phi.., Phi.., theta.., Theta.., varphi`.

use std::collections::HashMap;

use bsarma::diagnostics::{self, default_lags, ResidualKind};
use bsarma::estimation::{self, FitOptions, FittedModel};
use bsarma::montecarlo::{replication_rng, simulate_series};
use bsarma::{BsarmaError, Link, ModelOrder, ParamVector, PreparedSeries, SeriesData};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

type OrderTuple = (usize, usize, usize, usize, usize);

fn err(e: BsarmaError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn order_from(t: OrderTuple) -> PyResult<ModelOrder> {
    ModelOrder::new(t.0, t.1, t.2, t.3, t.4).map_err(err)
}

fn params_from(order: &ModelOrder, v: &[f64]) -> PyResult<ParamVector> {
    ParamVector::from_slice(order, v).map_err(err)
}

fn prepared(y: Vec<f64>, order: &ModelOrder, link: &str) -> PyResult<PreparedSeries> {
    let s = SeriesData::new(y).map_err(err)?;
    let link = Link::by_name(link).map_err(err)?;
    PreparedSeries::new(order, &s, &link).map_err(err)
}

/// A fitted model.
#[pyclass(name = "Fit", module = "pybsarma", frozen)]
struct PyFit {
    inner: FittedModel,
}

#[pymethods]
impl PyFit {
    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.order.param_names()
    }

    #[getter]
    fn estimates(&self) -> Vec<f64> {
        self.inner.estimate_vec()
    }

    #[getter]
    fn start(&self) -> Vec<f64> {
        self.inner.start.to_vec()
    }

    #[getter]
    fn std_errors(&self) -> PyResult<Vec<f64>> {
        self.inner.std_errors().map_err(err)
    }

    #[getter]
    fn covariance(&self) -> PyResult<Vec<Vec<f64>>> {
        let c = self.inner.covariance().map_err(err)?;
        Ok((0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect())
    }

    #[getter]
    fn loglik(&self) -> f64 {
        self.inner.loglik
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn termination(&self) -> String {
        self.inner.termination.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn burn_in(&self) -> usize {
        self.inner.burn_in()
    }

    #[getter]
    fn fitted_values(&self) -> Vec<f64> {
        bsarma::forecast::fitted_values(&self.inner)
    }

    /// `kind` is one of `weighted`, `standardized`, `predictor`.
    #[pyo3(signature = (kind = "weighted"))]
    fn residuals(&self, kind: &str) -> PyResult<Vec<f64>> {
        let kind: ResidualKind = kind.parse().map_err(err)?;
        Ok(diagnostics::residuals(&self.inner, kind).values)
    }

    fn forecast(&self, h: usize) -> PyResult<Vec<f64>> {
        Ok(bsarma::forecast::forecast(&self.inner, h).map_err(err)?.means)
    }

    #[pyo3(signature = (index, level = 0.95))]
    fn confidence_interval(&self, index: usize, level: f64) -> PyResult<(f64, f64)> {
        estimation::confidence_interval(&self.inner, index, level).map_err(err)
    }

    /// `(z, p_value)` for `H0: parameter[index] = null_value`.
    #[pyo3(signature = (index, null_value = 0.0))]
    fn wald_z(&self, index: usize, null_value: f64) -> PyResult<(f64, f64)> {
        let z = estimation::wald_z(&self.inner, index, null_value).map_err(err)?;
        Ok((z.statistic, z.p_value))
    }

    /// `(statistic, df, p_value)`.
    fn seasonality_test(&self) -> PyResult<(f64, usize, f64)> {
        let w = estimation::seasonality_test(&self.inner).map_err(err)?;
        Ok((w.statistic, w.df, w.p_value))
    }

    /// `(statistic, df, p_value)` on the weighted residuals.
    #[pyo3(signature = (b = None))]
    fn ljung_box(&self, b: Option<usize>) -> PyResult<(f64, usize, f64)> {
        self.portmanteau(b, diagnostics::ljung_box)
    }

    #[pyo3(signature = (b = None))]
    fn monti(&self, b: Option<usize>) -> PyResult<(f64, usize, f64)> {
        self.portmanteau(b, diagnostics::monti)
    }

    fn information_criteria(&self) -> HashMap<&'static str, f64> {
        let ic = diagnostics::information_criteria(&self.inner);
        HashMap::from([("maic", ic.maic), ("msic", ic.msic), ("mhq", ic.mhq)])
    }

    fn deviance(&self) -> PyResult<f64> {
        Ok(diagnostics::deviance(&self.inner).map_err(err)?.deviance)
    }

    fn __repr__(&self) -> String {
        let o = &self.inner.order;
        format!(
            "Fit(order=({}, {}, {}, {}, {}), loglik={:.4}, converged={})",
            o.p, o.q, o.sp, o.sq, o.period, self.inner.loglik, self.inner.converged
        )
    }
}

impl PyFit {
    fn portmanteau(
        &self,
        b: Option<usize>,
        test: fn(&diagnostics::ResidualSeries, &ModelOrder, usize) -> bsarma::Result<diagnostics::WhiteNoiseResult>,
    ) -> PyResult<(f64, usize, f64)> {
        let order = &self.inner.order;
        let r = diagnostics::residuals(&self.inner, ResidualKind::Weighted);
        let res = test(&r, order, b.unwrap_or_else(|| default_lags(order))).map_err(err)?;
        Ok((res.statistic, res.df, res.p_value))
    }
}

/// Conditional maximum likelihood fit of `y` with the given order.
#[pyfunction]
#[pyo3(signature = (y, order, link = "logit", start = None, max_iterations = 500))]
fn fit(y: Vec<f64>, order: OrderTuple, link: &str, start: Option<Vec<f64>>, max_iterations: usize) -> PyResult<PyFit> {
    let order = order_from(order)?;
    let series = SeriesData::new(y).map_err(err)?;
    let options = FitOptions {
        max_iterations,
        link: Link::by_name(link).map_err(err)?,
        ..FitOptions::default()
    };
    let inner = match start {
        Some(v) => estimation::fit_from(&order, &series, params_from(&order, &v)?, &options),
        None => estimation::fit(&order, &series, &options),
    }
    .map_err(err)?;
    Ok(PyFit { inner })
}

/// Draws `n` observations; replication stream 0 of `seed`.
#[pyfunction]
#[pyo3(signature = (order, params, n, seed = 1, link = "logit"))]
fn simulate(order: OrderTuple, params: Vec<f64>, n: usize, seed: u64, link: &str) -> PyResult<Vec<f64>> {
    let order = order_from(order)?;
    let p = params_from(&order, &params)?;
    let link = Link::by_name(link).map_err(err)?;
    let mut rng = replication_rng(seed, 0);
    let s = simulate_series(&order, &p, n, &mut rng, None, &link).map_err(err)?;
    Ok(s.values().to_vec())
}

#[pyfunction]
#[pyo3(signature = (y, order, params, link = "logit"))]
fn loglik(y: Vec<f64>, order: OrderTuple, params: Vec<f64>, link: &str) -> PyResult<f64> {
    let order = order_from(order)?;
    let p = params_from(&order, &params)?;
    prepared(y, &order, link)?.loglik(&p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (y, order, params, link = "logit"))]
fn score(y: Vec<f64>, order: OrderTuple, params: Vec<f64>, link: &str) -> PyResult<Vec<f64>> {
    let order = order_from(order)?;
    let p = params_from(&order, &params)?;
    prepared(y, &order, link)?.score(&p).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (y, order, params, link = "logit"))]
fn fisher_information(y: Vec<f64>, order: OrderTuple, params: Vec<f64>, link: &str) -> PyResult<Vec<Vec<f64>>> {
    let order = order_from(order)?;
    let p = params_from(&order, &params)?;
    let info = prepared(y, &order, link)?.fisher_information(&p).map_err(err)?;
    let k = info.matrix();
    Ok((0..k.nrows()).map(|i| k.row(i).iter().copied().collect()).collect())
}

#[pyfunction]
fn acf(values: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    diagnostics::acf(&values, max_lag).map_err(err)
}

#[pyfunction]
fn pacf(values: Vec<f64>, max_lag: usize) -> PyResult<Vec<f64>> {
    diagnostics::pacf(&values, max_lag).map_err(err)
}

#[pymodule]
fn pybsarma(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(loglik, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_information, m)?)?;
    m.add_function(wrap_pyfunction!(acf, m)?)?;
    m.add_function(wrap_pyfunction!(pacf, m)?)?;
    Ok(())
}
