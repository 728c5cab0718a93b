//! Series simulation and Monte Carlo studies of the estimator and of the
//! portmanteau tests.
//!
//! Replication `r` always draws from a ChaCha8 stream seeded with the study
//! seed and stream number `r`, so reports do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{default_lags, ljung_box, monti, residuals, ResidualKind};
use crate::error::{BsarmaError, Result};
use crate::estimation::{confidence_interval, fit, FitOptions};
use crate::model::{burn_in, LagLists, Link, ModelOrder, ParamVector, SeriesData};
use crate::special::{beta_sample, BetaParams};

/// Extra draws discarded beyond the burn-in when no warm-up is given.
pub const DEFAULT_EXTRA_WARMUP: usize = 50;

/// Simulates `n` observations. Pre-sample history uses `μ = g⁻¹(β)` and zero
/// errors; the first `warmup` draws (default `50 + m`) are discarded.
pub fn simulate_series<R: Rng + ?Sized>(
    order: &ModelOrder,
    params: &ParamVector,
    n: usize,
    rng: &mut R,
    warmup: Option<usize>,
    link: &Link,
) -> Result<SeriesData> {
    params.validate(order)?;
    if n == 0 {
        return Err(BsarmaError::Input("cannot simulate an empty series".into()));
    }
    let m = burn_in(order);
    let warmup = warmup.unwrap_or(DEFAULT_EXTRA_WARMUP + m);
    let lags = LagLists::new(order, params);
    let total = m + warmup + n;
    let g0 = link.forward_unchecked(link.link_inv(params.beta));
    let mut gy = vec![g0; m];
    let mut err = vec![0.0; m];
    gy.reserve(total - m);
    err.reserve(total - m);
    let mut out = Vec::with_capacity(n);
    for t in m..total {
        let mut eta = params.beta;
        for &(lag, c) in &lags.ar {
            eta += c * gy[t - lag];
        }
        for &(lag, c) in &lags.ma {
            eta += c * err[t - lag];
        }
        let mu = link.link_inv(eta);
        let y = beta_sample(rng, BetaParams::new(mu, params.precision)?);
        let g = link.forward_unchecked(y);
        gy.push(g);
        err.push(g - eta);
        if t >= m + warmup {
            out.push(y);
        }
    }
    SeriesData::new(out)
}

/// Generator for replication `replication` of a study seeded with `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Estimation,
    Size,
    Power,
}

impl std::str::FromStr for Study {
    type Err = BsarmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimation" => Ok(Self::Estimation),
            "size" => Ok(Self::Size),
            "power" => Ok(Self::Power),
            other => Err(BsarmaError::Input(format!("unknown study {other:?}"))),
        }
    }
}

/// Misspecification used by the power study. Both start from a
/// βSARMA(1,1)×(1,1)_S base parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerScenario {
    /// Data with `θ_1 = δ`; fitted βSARMA(1,0)×(1,1)_S.
    OmittedMa,
    /// Data from βSARMA(2,1)×(1,1)_S with `φ_2 = -δ`; fitted βSARMA(1,1)×(1,1)_S.
    OmittedAr,
}

impl PowerScenario {
    pub fn data_model(&self, base: &ParamVector, period: usize, delta: f64) -> (ModelOrder, ParamVector) {
        let mut params = base.clone();
        match self {
            PowerScenario::OmittedMa => {
                params.ma = vec![delta];
                (ModelOrder { p: 1, q: 1, sp: 1, sq: 1, period }, params)
            }
            PowerScenario::OmittedAr => {
                params.ar = vec![base.ar[0], -delta];
                (ModelOrder { p: 2, q: 1, sp: 1, sq: 1, period }, params)
            }
        }
    }

    pub fn fitted_order(&self, period: usize) -> ModelOrder {
        match self {
            PowerScenario::OmittedMa => ModelOrder { p: 1, q: 0, sp: 1, sq: 1, period },
            PowerScenario::OmittedAr => ModelOrder { p: 1, q: 1, sp: 1, sq: 1, period },
        }
    }
}

impl std::str::FromStr for PowerScenario {
    type Err = BsarmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "omitted-ma" => Ok(Self::OmittedMa),
            "2" | "omitted-ar" => Ok(Self::OmittedAr),
            other => Err(BsarmaError::Input(format!("unknown power scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub order: ModelOrder,
    pub true_params: ParamVector,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub study: Study,
    pub power_grid: Vec<f64>,
    pub scenario: PowerScenario,
    pub nominal_levels: Vec<f64>,
    /// Portmanteau lags; `None` uses `max(10, 2S)`.
    pub lags: Option<usize>,
    pub warmup: Option<usize>,
    pub fit_options: FitOptions,
}

impl McConfig {
    /// The βSARMA(1,1)×(1,1)₁₂ design with γ = (β, φ₁, Φ₁, θ₁, Θ₁, φ) =
    /// (-1, -0.5, 0.3, 0.4, -0.35, 120).
    pub fn reference_design(study: Study) -> Self {
        let order = ModelOrder { p: 1, q: 1, sp: 1, sq: 1, period: 12 };
        let true_params = ParamVector {
            beta: -1.0,
            ar: vec![-0.5],
            ma: vec![0.4],
            sar: vec![0.3],
            sma: vec![-0.35],
            precision: 120.0,
        };
        Self {
            order,
            true_params,
            sample_sizes: vec![50, 100, 200, 500],
            replications: 1000,
            seed: 2024,
            study,
            power_grid: vec![0.1, 0.3, 0.6],
            scenario: PowerScenario::OmittedAr,
            nominal_levels: vec![0.10, 0.05, 0.01],
            lags: None,
            warmup: None,
            fit_options: FitOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(BsarmaError::Input("replications must be at least 1".into()));
        }
        self.true_params.validate(&self.order)?;
        let orders: Vec<ModelOrder> = match self.study {
            Study::Power => {
                let base = ModelOrder { p: 1, q: 1, sp: 1, sq: 1, period: self.order.period };
                if self.order != base {
                    return Err(BsarmaError::InvalidOrder(format!(
                        "power scenarios start from {base}, got {}",
                        self.order
                    )));
                }
                let (data, _) = self.scenario.data_model(&self.true_params, self.order.period, 0.0);
                vec![data, self.scenario.fitted_order(self.order.period)]
            }
            _ => vec![self.order],
        };
        for n in &self.sample_sizes {
            for o in &orders {
                let need = burn_in(o) + o.n_params();
                if *n <= need {
                    return Err(BsarmaError::InsufficientData { n: *n, required: need });
                }
            }
        }
        if self.nominal_levels.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(BsarmaError::Input("nominal levels must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One parameter at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationRow {
    pub n: usize,
    pub parameter: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// `100 * bias / truth`.
    pub relative_bias_pct: f64,
    pub sd: f64,
    pub mse: f64,
    /// Share of 95% Wald intervals that contain the truth.
    pub coverage_95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRow {
    pub n: usize,
    pub delta: Option<f64>,
    pub test: String,
    pub level: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bookkeeping {
    pub n: usize,
    pub delta: Option<f64>,
    pub replications: usize,
    /// Replications whose fit did not converge or raised an error.
    pub failed: usize,
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub study: Study,
    pub estimation: Vec<EstimationRow>,
    pub rejection: Vec<RejectionRow>,
    pub bookkeeping: Vec<Bookkeeping>,
}

impl McReport {
    pub fn estimation_row(&self, n: usize, parameter: &str) -> Option<&EstimationRow> {
        self.estimation.iter().find(|r| r.n == n && r.parameter == parameter)
    }

    pub fn rate(&self, n: usize, delta: Option<f64>, test: &str, level: f64) -> Option<f64> {
        self.rejection
            .iter()
            .find(|r| r.n == n && r.delta == delta && r.test == test && (r.level - level).abs() < 1e-12)
            .map(|r| r.rate)
    }
}

/// Point estimates plus interval coverage flags for one replication.
#[derive(Debug, Clone)]
pub struct ReplicationEstimate {
    pub estimates: Vec<f64>,
    pub covered: Option<Vec<bool>>,
}

/// Mean, bias, relative bias, SD (divisor R) and MSE per coordinate.
pub fn summarize_estimates(
    n: usize,
    names: &[String],
    truth: &[f64],
    reps: &[ReplicationEstimate],
) -> Vec<EstimationRow> {
    let r = reps.len() as f64;
    (0..truth.len())
        .map(|j| {
            let vals: Vec<f64> = reps.iter().map(|e| e.estimates[j]).collect();
            let mean = vals.iter().sum::<f64>() / r;
            let bias = mean - truth[j];
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
            let mse = vals.iter().map(|v| (v - truth[j]).powi(2)).sum::<f64>() / r;
            let with_ci: Vec<bool> = reps.iter().filter_map(|e| e.covered.as_ref().map(|c| c[j])).collect();
            let coverage = if with_ci.is_empty() {
                f64::NAN
            } else {
                with_ci.iter().filter(|&&c| c).count() as f64 / with_ci.len() as f64
            };
            EstimationRow {
                n,
                parameter: names[j].clone(),
                truth: truth[j],
                mean,
                bias,
                relative_bias_pct: 100.0 * bias / truth[j],
                sd: var.sqrt(),
                mse,
                coverage_95: coverage,
            }
        })
        .collect()
}

fn estimation_replication(config: &McConfig, n: usize, rep: usize) -> Option<ReplicationEstimate> {
    let mut rng = replication_rng(config.seed, rep as u64);
    let link = config.fit_options.link;
    let series =
        simulate_series(&config.order, &config.true_params, n, &mut rng, config.warmup, &link).ok()?;
    let fitted = fit(&config.order, &series, &config.fit_options).ok()?;
    if !fitted.converged {
        return None;
    }
    let truth = config.true_params.to_vec();
    let covered = fitted.covariance.as_ref().map(|_| {
        (0..truth.len())
            .map(|j| {
                confidence_interval(&fitted, j, 0.95)
                    .map(|(lo, hi)| lo <= truth[j] && truth[j] <= hi)
                    .unwrap_or(false)
            })
            .collect()
    });
    Some(ReplicationEstimate {
        estimates: fitted.estimate_vec(),
        covered,
    })
}

/// Bias, relative bias, SD and MSE of the conditional ML estimator.
pub fn estimation_study(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let names = config.order.param_names();
    let truth = config.true_params.to_vec();
    let mut rows = Vec::new();
    let mut books = Vec::new();
    for &n in &config.sample_sizes {
        let results: Vec<Option<ReplicationEstimate>> = (0..config.replications)
            .into_par_iter()
            .map(|rep| estimation_replication(config, n, rep))
            .collect();
        let used: Vec<ReplicationEstimate> = results.into_iter().flatten().collect();
        books.push(Bookkeeping {
            n,
            delta: None,
            replications: config.replications,
            failed: config.replications - used.len(),
            used: used.len(),
        });
        if !used.is_empty() {
            rows.extend(summarize_estimates(n, &names, &truth, &used));
        }
    }
    Ok(McReport {
        study: Study::Estimation,
        estimation: rows,
        rejection: Vec::new(),
        bookkeeping: books,
    })
}

/// p-values of the Ljung–Box and Monti tests for one replication.
fn test_replication(
    config: &McConfig,
    data_order: &ModelOrder,
    data_params: &ParamVector,
    fit_order: &ModelOrder,
    n: usize,
    rep: usize,
) -> Option<(f64, f64)> {
    let mut rng = replication_rng(config.seed, rep as u64);
    let link = config.fit_options.link;
    let series = simulate_series(data_order, data_params, n, &mut rng, config.warmup, &link).ok()?;
    let fitted = fit(fit_order, &series, &config.fit_options).ok()?;
    if !fitted.converged {
        return None;
    }
    let b = config.lags.unwrap_or_else(|| default_lags(fit_order));
    let res = residuals(&fitted, ResidualKind::Weighted);
    let lb = ljung_box(&res, fit_order, b).ok()?;
    let mt = monti(&res, fit_order, b).ok()?;
    Some((lb.p_value, mt.p_value))
}

/// Rejection rate of `p <= level` per test and level.
pub fn rejection_rows(n: usize, delta: Option<f64>, levels: &[f64], pvalues: &[(f64, f64)]) -> Vec<RejectionRow> {
    let r = pvalues.len() as f64;
    let mut rows = Vec::new();
    for (test, pick) in [("ljung_box", 0usize), ("monti", 1usize)] {
        for &level in levels {
            let rejected = pvalues
                .iter()
                .filter(|p| if pick == 0 { p.0 <= level } else { p.1 <= level })
                .count();
            rows.push(RejectionRow {
                n,
                delta,
                test: test.to_string(),
                level,
                rate: if r > 0.0 { rejected as f64 / r } else { f64::NAN },
            });
        }
    }
    rows
}

fn run_tests(
    config: &McConfig,
    data_order: &ModelOrder,
    data_params: &ParamVector,
    fit_order: &ModelOrder,
    delta: Option<f64>,
    levels: &[f64],
    report: &mut McReport,
) {
    for &n in &config.sample_sizes {
        let results: Vec<Option<(f64, f64)>> = (0..config.replications)
            .into_par_iter()
            .map(|rep| test_replication(config, data_order, data_params, fit_order, n, rep))
            .collect();
        let used: Vec<(f64, f64)> = results.into_iter().flatten().collect();
        report.bookkeeping.push(Bookkeeping {
            n,
            delta,
            replications: config.replications,
            failed: config.replications - used.len(),
            used: used.len(),
        });
        report.rejection.extend(rejection_rows(n, delta, levels, &used));
    }
}

/// Null rejection rates: data simulated from and fitted with the same order.
pub fn size_study(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let mut report = McReport {
        study: Study::Size,
        estimation: Vec::new(),
        rejection: Vec::new(),
        bookkeeping: Vec::new(),
    };
    run_tests(
        config,
        &config.order,
        &config.true_params,
        &config.order,
        None,
        &config.nominal_levels,
        &mut report,
    );
    Ok(report)
}

/// Rejection rates at the 5% level under the configured misspecification.
pub fn power_study(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let mut report = McReport {
        study: Study::Power,
        estimation: Vec::new(),
        rejection: Vec::new(),
        bookkeeping: Vec::new(),
    };
    let period = config.order.period;
    let fit_order = config.scenario.fitted_order(period);
    for &delta in &config.power_grid {
        let (data_order, data_params) = config.scenario.data_model(&config.true_params, period, delta);
        run_tests(config, &data_order, &data_params, &fit_order, Some(delta), &[0.05], &mut report);
    }
    Ok(report)
}

/// Dispatches on `config.study`.
pub fn run_study(config: &McConfig) -> Result<McReport> {
    match config.study {
        Study::Estimation => estimation_study(config),
        Study::Size => size_study(config),
        Study::Power => power_study(config),
    }
}
