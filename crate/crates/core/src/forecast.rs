//! In-sample fitted values, out-of-sample forecasts and accuracy measures.

use serde::Serialize;

use crate::error::{BsarmaError, Result};
use crate::estimation::FittedModel;
use crate::model::LagLists;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastResult {
    pub horizon: usize,
    pub means: Vec<f64>,
}

/// `μ̂_t` for `t = m+1..n`.
pub fn fitted_values(fit: &FittedModel) -> Vec<f64> {
    fit.path.mu[fit.burn_in()..].to_vec()
}

/// h-step-ahead forecasts. Future link values are replaced by their
/// forecasts and future errors by zero.
pub fn forecast(fit: &FittedModel, h: usize) -> Result<ForecastResult> {
    if h == 0 {
        return Err(BsarmaError::Input("forecast horizon must be at least 1".into()));
    }
    let link = &fit.link;
    let est = &fit.estimates;
    let lags = LagLists::new(&fit.order, est);
    let n = fit.n();
    let mut gy: Vec<f64> = fit.series.values().iter().map(|&y| link.forward_unchecked(y)).collect();
    let mut err = fit.path.err.clone();
    gy.reserve(h);
    err.reserve(h);
    let mut means = Vec::with_capacity(h);
    for t in n..n + h {
        let mut eta = est.beta;
        for &(lag, c) in &lags.ar {
            eta += c * gy[t - lag];
        }
        for &(lag, c) in &lags.ma {
            eta += c * err[t - lag];
        }
        let mu = link.link_inv(eta);
        means.push(mu);
        gy.push(link.forward_unchecked(mu));
        err.push(0.0);
    }
    Ok(ForecastResult { horizon: h, means })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    pub mse: f64,
    pub mape: f64,
}

/// Mean squared error and mean absolute percentage error (actuals as denominator).
pub fn accuracy(forecasts: &[f64], actuals: &[f64]) -> Result<Accuracy> {
    if forecasts.len() != actuals.len() {
        return Err(BsarmaError::DimensionMismatch {
            expected: actuals.len(),
            got: forecasts.len(),
        });
    }
    if actuals.is_empty() {
        return Err(BsarmaError::Input("accuracy needs at least one pair".into()));
    }
    for (row, &a) in actuals.iter().enumerate() {
        if !(a > 0.0 && a < 1.0) {
            return Err(BsarmaError::BoundaryValue { row: row + 1, value: a });
        }
    }
    let n = actuals.len() as f64;
    let mse = forecasts.iter().zip(actuals).map(|(f, a)| (f - a).powi(2)).sum::<f64>() / n;
    let mape = forecasts.iter().zip(actuals).map(|(f, a)| (f - a).abs() / a).sum::<f64>() / n;
    Ok(Accuracy { mse, mape })
}
