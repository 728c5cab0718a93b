//! Residuals, correlograms, portmanteau tests, deviance and information criteria.

use serde::Serialize;

use crate::error::{BsarmaError, Result};
use crate::estimation::{chi_squared_sf, FittedModel};
use crate::model::ModelOrder;
use crate::special::{digamma_unchecked, trigamma_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// `(y - μ̂) / sqrt(V(μ̂) / (1 + φ̂))`
    Standardized,
    /// `(g(y) - η̂) / sqrt(g'(μ̂)² V(μ̂) / (1 + φ̂))`
    PredictorScale,
    /// `(y* - μ̂*) / sqrt(ψ'(μ̂φ̂) + ψ'((1 - μ̂)φ̂))`
    Weighted,
}

impl std::str::FromStr for ResidualKind {
    type Err = BsarmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standardized" => Ok(Self::Standardized),
            "predictor" | "predictor_scale" => Ok(Self::PredictorScale),
            "weighted" => Ok(Self::Weighted),
            other => Err(BsarmaError::Input(format!("unknown residual kind {other:?}"))),
        }
    }
}

/// Residuals for `t = m+1..n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub kind: ResidualKind,
    pub values: Vec<f64>,
}

impl ResidualSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn residuals(fit: &FittedModel, kind: ResidualKind) -> ResidualSeries {
    let m = fit.burn_in();
    let y = fit.series.values();
    let phi = fit.estimates.precision;
    let link = &fit.link;
    let values = (m..y.len())
        .map(|t| {
            let mu = fit.path.mu[t];
            let var = mu * (1.0 - mu) / (1.0 + phi);
            match kind {
                ResidualKind::Standardized => (y[t] - mu) / var.sqrt(),
                ResidualKind::PredictorScale => {
                    let d = link.derivative_unchecked(mu);
                    (link.forward_unchecked(y[t]) - fit.path.eta[t]) / (d * d * var).sqrt()
                }
                ResidualKind::Weighted => {
                    let ystar = (y[t] / (1.0 - y[t])).ln();
                    let a = mu * phi;
                    let b = (1.0 - mu) * phi;
                    let mustar = digamma_unchecked(a) - digamma_unchecked(b);
                    (ystar - mustar) / (trigamma_unchecked(a) + trigamma_unchecked(b)).sqrt()
                }
            }
        })
        .collect();
    ResidualSeries { kind, values }
}

/// Denominator used by [`acf_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcfDenominator {
    /// `Σ_{t} (r_t - r̄)²` over the whole sample.
    #[default]
    FullSample,
    /// `Σ_{t ≤ n - i} (r_t - r̄)²`, truncated at each lag.
    Truncated,
}

/// Sample autocorrelations `ρ̂(0..=max_lag)`.
pub fn acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    acf_with(values, max_lag, AcfDenominator::FullSample)
}

pub fn acf_with(values: &[f64], max_lag: usize, denominator: AcfDenominator) -> Result<Vec<f64>> {
    let n = values.len();
    if n < max_lag + 2 {
        return Err(BsarmaError::InsufficientData {
            n,
            required: max_lag + 1,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let total: f64 = c.iter().map(|v| v * v).sum();
    let scale: f64 = values.iter().map(|v| v * v).sum();
    if !(total > 1e-24 * scale) {
        return Err(BsarmaError::UndefinedCorrelation("series is constant".into()));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let num: f64 = c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum();
        let den = match denominator {
            AcfDenominator::FullSample => total,
            AcfDenominator::Truncated => c[..n - lag].iter().map(|v| v * v).sum(),
        };
        out.push(num / den);
    }
    Ok(out)
}

/// Partial autocorrelations `p(1..=max_lag)` via Durbin–Levinson on the ACF.
pub fn pacf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let rho = acf(values, max_lag)?;
    Ok(pacf_from_acf(&rho))
}

/// `rho[0]` must be 1. Returns lags `1..rho.len()`.
pub fn pacf_from_acf(rho: &[f64]) -> Vec<f64> {
    let max_lag = rho.len().saturating_sub(1);
    let mut out = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut v = 1.0;
    for k in 1..=max_lag {
        let mut num = rho[k];
        for (j, &p) in phi.iter().enumerate() {
            num -= p * rho[k - 1 - j];
        }
        let kk = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        for j in 0..prev.len() {
            phi[j] = prev[j] - kk * prev[prev.len() - 1 - j];
        }
        phi.push(kk);
        v *= 1.0 - kk * kk;
        out.push(kk);
    }
    out
}

/// Portmanteau test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhiteNoiseResult {
    pub statistic: f64,
    pub b: usize,
    pub df: usize,
    pub p_value: f64,
}

/// `b = max(10, 2S)`.
pub fn default_lags(order: &ModelOrder) -> usize {
    10usize.max(2 * order.period)
}

fn portmanteau(corr: &[f64], n_eff: usize, order: &ModelOrder, b: usize) -> Result<WhiteNoiseResult> {
    let df = b as i64 - (order.p + order.q + order.sp + order.sq) as i64;
    if df < 1 {
        return Err(BsarmaError::DegreesOfFreedom(df));
    }
    let n = n_eff as f64;
    let sum: f64 = corr
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / (n - (i + 1) as f64))
        .sum();
    let statistic = n * (n + 2.0) * sum;
    let df = df as usize;
    Ok(WhiteNoiseResult {
        statistic,
        b,
        df,
        p_value: chi_squared_sf(statistic, df),
    })
}

fn check_lags(n: usize, b: usize) -> Result<()> {
    if b == 0 {
        return Err(BsarmaError::Input("number of lags b must be positive".into()));
    }
    if n < b + 2 {
        return Err(BsarmaError::InsufficientData { n, required: b + 1 });
    }
    Ok(())
}

/// Ljung–Box statistic on the first `b` residual autocorrelations.
pub fn ljung_box(residuals: &ResidualSeries, order: &ModelOrder, b: usize) -> Result<WhiteNoiseResult> {
    check_lags(residuals.len(), b)?;
    let rho = acf(&residuals.values, b)?;
    portmanteau(&rho[1..], residuals.len(), order, b)
}

/// Monti statistic on the first `b` residual partial autocorrelations.
pub fn monti(residuals: &ResidualSeries, order: &ModelOrder, b: usize) -> Result<WhiteNoiseResult> {
    check_lags(residuals.len(), b)?;
    let p = pacf(&residuals.values, b)?;
    portmanteau(&p, residuals.len(), order, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviance {
    pub deviance: f64,
    pub scaled: f64,
}

/// `D = 2(ℓ̃ - ℓ̂)` with the saturated model `μ̃_t = y_t` at the fitted precision.
pub fn deviance(fit: &FittedModel) -> Result<Deviance> {
    let prepared = fit.prepared()?;
    let phi = fit.estimates.precision;
    let y = fit.series.values();
    let m = fit.burn_in();
    let mut saturated = 0.0;
    for (t, &yt) in y.iter().enumerate().skip(m) {
        saturated += prepared.term(t, yt, phi)?;
    }
    let d = (2.0 * (saturated - fit.loglik)).max(0.0);
    let dof = (fit.n() - m) as f64 - fit.n_params() as f64;
    Ok(Deviance {
        deviance: d,
        scaled: d / dof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InformationCriteria {
    pub maic: f64,
    pub msic: f64,
    pub mhq: f64,
}

/// Criteria on the rescaled log-likelihood `ℓ̂ n / (n - m)`.
pub fn information_criteria_raw(loglik: f64, n: usize, m: usize, k: usize) -> InformationCriteria {
    let nf = n as f64;
    let scaled = loglik * nf / (n - m) as f64;
    let k = k as f64;
    InformationCriteria {
        maic: -2.0 * scaled + 2.0 * k,
        msic: -2.0 * scaled + nf.ln() * k,
        mhq: -2.0 * scaled + nf.ln().ln() * k,
    }
}

pub fn information_criteria(fit: &FittedModel) -> InformationCriteria {
    information_criteria_raw(fit.loglik, fit.n(), fit.burn_in(), fit.n_params())
}

/// Normal QQ coordinates `(theoretical, sample)` using `(i - 0.5) / n` plotting positions.
pub fn qq_points(values: &[f64]) -> Vec<(f64, f64)> {
    use statrs::distribution::{ContinuousCDF, Normal};
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let normal = Normal::standard();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (normal.inverse_cdf((i as f64 + 0.5) / n), v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut x = seed;
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn acf_lag_zero_is_one() {
        let v = noise(50, 1);
        let r = acf(&v, 5).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
        let t = acf_with(&v, 5, AcfDenominator::Truncated).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn acf_constant_errors() {
        assert!(matches!(acf(&[0.3; 10], 2), Err(BsarmaError::UndefinedCorrelation(_))));
    }

    fn solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
        // Gaussian elimination with partial pivoting.
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    #[test]
    fn pacf_matches_yule_walker_regression() {
        // The order-i autoregression fitted to the sample autocorrelations
        // has p(i) as its last coefficient.
        let v = noise(200, 7);
        let r = acf(&v, 8).unwrap();
        let p = pacf(&v, 8).unwrap();
        for order in 1usize..=8 {
            let mut a: Vec<Vec<f64>> = (0..order)
                .map(|i| (0..order).map(|j| r[i.abs_diff(j)]).collect())
                .collect();
            let mut b: Vec<f64> = (1..=order).map(|i| r[i]).collect();
            let coef = solve(&mut a, &mut b);
            assert!((coef[order - 1] - p[order - 1]).abs() < 1e-8, "order {order}");
        }
    }

    #[test]
    fn ljung_box_matches_hand_sum() {
        let v = noise(20, 3);
        let res = ResidualSeries {
            kind: ResidualKind::Weighted,
            values: v.clone(),
        };
        let order = ModelOrder::arma(1, 0);
        let lb = ljung_box(&res, &order, 5).unwrap();
        let mean = v.iter().sum::<f64>() / 20.0;
        let den: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
        let mut q = 0.0;
        for i in 1..=5 {
            let mut num = 0.0;
            for t in 0..20 - i {
                num += (v[t] - mean) * (v[t + i] - mean);
            }
            let rho = num / den;
            q += rho * rho / (20 - i) as f64;
        }
        q *= 20.0 * 22.0;
        assert!((lb.statistic - q).abs() < 1e-10);
        assert_eq!(lb.df, 4);
    }

    #[test]
    fn monti_matches_hand_sum() {
        let v = noise(20, 5);
        let res = ResidualSeries {
            kind: ResidualKind::Weighted,
            values: v.clone(),
        };
        let order = ModelOrder::arma(0, 1);
        let mt = monti(&res, &order, 4).unwrap();
        let p = pacf(&v, 4).unwrap();
        let q: f64 = 20.0 * 22.0 * p.iter().enumerate().map(|(i, x)| x * x / (19 - i) as f64).sum::<f64>();
        assert!((mt.statistic - q).abs() < 1e-10);
    }

    #[test]
    fn zero_correlation_gives_zero_statistic() {
        let order = ModelOrder::arma(1, 0);
        let r = portmanteau(&[0.0; 6], 50, &order, 6).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn too_few_degrees_of_freedom() {
        let v = noise(40, 2);
        let res = ResidualSeries {
            kind: ResidualKind::Weighted,
            values: v,
        };
        let order = ModelOrder::new(2, 1, 1, 1, 12).unwrap();
        assert!(matches!(ljung_box(&res, &order, 5), Err(BsarmaError::DegreesOfFreedom(0))));
    }

    #[test]
    fn default_b() {
        assert_eq!(default_lags(&ModelOrder::new(1, 1, 1, 1, 12).unwrap()), 24);
        assert_eq!(default_lags(&ModelOrder::new(1, 1, 1, 1, 4).unwrap()), 10);
    }

    #[test]
    fn criteria_arithmetic() {
        let ic = information_criteria_raw(-100.0, 110, 10, 5);
        assert!((ic.maic - 230.0).abs() < 1e-12);
        let classic = information_criteria_raw(-100.0, 110, 0, 5);
        assert!((classic.maic - 210.0).abs() < 1e-12);
        assert!((ic.maic - ic.msic - (2.0 - 110f64.ln()) * 5.0).abs() < 1e-12);
    }
}
