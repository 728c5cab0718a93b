use bsarma::diagnostics::{deviance, information_criteria, residuals, ResidualKind};
use bsarma::estimation::{confidence_interval, fit, fit_from, seasonality_test, starting_values, wald_z, FitOptions, FittedModel};
use bsarma::forecast::{fitted_values, forecast};
use bsarma::likelihood::conditional_loglik;
use bsarma::model::{Link, ModelOrder, ParamVector, SeriesData};
use bsarma::montecarlo::{replication_rng, simulate_series, McConfig, Study};
use bsarma::PreparedSeries;

fn design_series(n: usize, seed: u64) -> (ModelOrder, ParamVector, SeriesData) {
    let cfg = McConfig::reference_design(Study::Estimation);
    let mut rng = replication_rng(seed, 0);
    let s = simulate_series(&cfg.order, &cfg.true_params, n, &mut rng, None, &Link::logit()).unwrap();
    (cfg.order, cfg.true_params, s)
}

fn fitted(n: usize, seed: u64) -> FittedModel {
    let (order, _, s) = design_series(n, seed);
    fit(&order, &s, &FitOptions::default()).unwrap()
}

#[test]
fn fit_improves_on_start_and_is_stationary() {
    let f = fitted(400, 1);
    assert!(f.converged, "{}", f.termination);
    let link = Link::logit();
    let start_ll = conditional_loglik(&f.order, &f.start, &f.series, &link).unwrap();
    assert!(f.loglik >= start_ll);
    let u = PreparedSeries::new(&f.order, &f.series, &link).unwrap().score(&f.estimates).unwrap();
    let scale = (f.n() - f.burn_in()) as f64;
    assert!(u.iter().all(|g| (g / scale).abs() < 1e-6), "{u:?}");
}

#[test]
fn refit_from_optimum_is_idempotent() {
    let f = fitted(300, 2);
    let again = fit_from(&f.order, &f.series, f.estimates.clone(), &FitOptions::default()).unwrap();
    for (a, b) in f.estimate_vec().iter().zip(again.estimate_vec()) {
        assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {b}");
    }
    assert!(again.loglik >= f.loglik - 1e-9);
}

#[test]
fn covariance_and_inference() {
    let f = fitted(500, 3);
    let cov = f.covariance().unwrap();
    assert_eq!(cov, &cov.transpose());
    assert!((0..cov.nrows()).all(|i| cov[(i, i)] > 0.0));
    let se = f.std_errors().unwrap();
    let (lo, hi) = confidence_interval(&f, 1, 0.95).unwrap();
    assert!(((hi - lo) / 2.0 - 1.959964 * se[1]).abs() < 1e-5);
    let z = wald_z(&f, 1, f.estimate_vec()[1]).unwrap();
    assert_eq!((z.statistic, z.p_value), (0.0, 1.0));
    let w = seasonality_test(&f).unwrap();
    assert_eq!(w.df, 2);
    assert!(w.statistic >= 0.0);
    assert!(confidence_interval(&f, 1, 1.0).is_err());
    assert!(wald_z(&f, 99, 0.0).is_err());
}

#[test]
fn standard_errors_shrink_with_n() {
    let small = fitted(100, 4).std_errors().unwrap()[1];
    let large = fitted(500, 4).std_errors().unwrap()[1];
    assert!(large < small);
}

#[test]
fn start_has_zero_moving_average() {
    let (order, _, s) = design_series(200, 5);
    let st = starting_values(&order, &s, &Link::logit()).unwrap();
    assert!(st.ma.iter().chain(&st.sma).all(|&c| c == 0.0));
    assert!(st.precision >= 0.1);
}

#[test]
fn insufficient_data_is_rejected() {
    let (order, _, s) = design_series(19, 6);
    assert!(fit(&order, &s, &FitOptions::default()).is_err());
}

#[test]
fn serialized_fit_round_trips() {
    let f = fitted(200, 7);
    let json = serde_json::to_string(&f).unwrap();
    let back: FittedModel = serde_json::from_str(&json).unwrap();
    assert_eq!(back, f);
    assert_eq!(fitted_values(&back), fitted_values(&f));
    let recomputed = bsarma::predictor_path(&back.order, &back.estimates, &back.series, &back.link).unwrap();
    assert_eq!(recomputed.mu[back.burn_in()..], fitted_values(&f)[..]);
    assert_eq!(forecast(&back, 6).unwrap(), forecast(&f, 6).unwrap());
}

#[test]
fn weighted_residuals_are_roughly_standard() {
    let f = fitted(500, 8);
    let r = residuals(&f, ResidualKind::Weighted);
    let n = r.len() as f64;
    let mean = r.values.iter().sum::<f64>() / n;
    let var = r.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.15);
    assert!((0.8..=1.2).contains(&var), "{var}");
    for kind in [ResidualKind::Standardized, ResidualKind::PredictorScale] {
        assert!(residuals(&f, kind).values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn deviance_and_criteria() {
    let f = fitted(300, 9);
    let d = deviance(&f).unwrap();
    assert!(d.deviance >= 0.0);
    let ic = information_criteria(&f);
    let k = f.n_params() as f64;
    assert!((ic.maic - ic.msic - (2.0 - (f.n() as f64).ln()) * k).abs() < 1e-9);
}

#[test]
fn maic_prefers_true_order() {
    let cfg = McConfig::reference_design(Study::Estimation);
    let under = ModelOrder { p: 1, q: 0, sp: 0, sq: 0, period: 12 };
    let mut wins = 0;
    let reps = 40;
    for rep in 0..reps {
        let (_, _, s) = design_series(300, 100 + rep);
        let full = fit(&cfg.order, &s, &FitOptions::default()).unwrap();
        let small = fit(&under, &s, &FitOptions::default()).unwrap();
        if information_criteria(&full).maic < information_criteria(&small).maic {
            wins += 1;
        }
    }
    assert!(wins * 2 > reps, "{wins} of {reps}");
}
