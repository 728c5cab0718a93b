use bsarma::likelihood::{eta_jacobian, fisher_information, score, PreparedSeries};
use bsarma::model::{predictor_path, Link, ModelOrder, ParamVector, SeriesData};
use bsarma::montecarlo::{replication_rng, simulate_series};
use bsarma::special::{beta_log_density, BetaParams};
use bsarma::conditional_loglik;
use proptest::prelude::*;

fn design(order: ModelOrder, ar: &[f64], sar: &[f64], ma: &[f64], sma: &[f64], beta: f64, precision: f64) -> (ModelOrder, ParamVector) {
    (
        order,
        ParamVector {
            beta,
            ar: ar.to_vec(),
            ma: ma.to_vec(),
            sar: sar.to_vec(),
            sma: sma.to_vec(),
            precision,
        },
    )
}

fn simulated(order: &ModelOrder, params: &ParamVector, n: usize, seed: u64) -> SeriesData {
    let mut rng = replication_rng(seed, 0);
    simulate_series(order, params, n, &mut rng, None, &Link::logit()).unwrap()
}

fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize) -> f64 {
    let h = 1e-4 * x[i].abs().max(1.0);
    let mut up = x.to_vec();
    let mut dn = x.to_vec();
    up[i] += h;
    dn[i] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn score_matches_finite_differences(
        ar in -0.4f64..0.4, sar in -0.4f64..0.4, ma in -0.4f64..0.4, sma in -0.4f64..0.4,
        beta in -1.0f64..1.0, precision in 5.0f64..100.0, seed in 0u64..1000,
    ) {
        let (order, params) = design(ModelOrder { p: 1, q: 1, sp: 1, sq: 1, period: 4 }, &[ar], &[sar], &[ma], &[sma], beta, precision);
        let series = simulated(&order, &params, 60, seed);
        let link = Link::logit();
        let analytic = score(&order, &params, &series, &link).unwrap();
        let f = |v: &[f64]| conditional_loglik(&order, &ParamVector::from_slice(&order, v).unwrap(), &series, &link).unwrap();
        let x = params.to_vec();
        for i in 0..x.len() {
            let fd = central_diff(f, &x, i);
            prop_assert!((analytic[i] - fd).abs() <= 1e-5 * analytic[i].abs().max(1.0), "coordinate {i}: {} vs {fd}", analytic[i]);
        }
    }

    #[test]
    fn loglik_is_finite_for_random_orders(
        p in 0usize..3, q in 0usize..3, sp in 0usize..2, sq in 0usize..2, seed in 0u64..1000,
    ) {
        let order = ModelOrder { p, q, sp, sq, period: 4 };
        let mut params = ParamVector::zeros(&order, -0.5, 30.0);
        params.ar.iter_mut().for_each(|c| *c = 0.2);
        params.ma.iter_mut().for_each(|c| *c = -0.1);
        let series = simulated(&order, &params, 50, seed);
        let ll = conditional_loglik(&order, &params, &series, &Link::logit()).unwrap();
        prop_assert!(ll.is_finite());
    }
}

#[test]
fn jacobian_matches_finite_differences_of_eta() {
    let (order, params) = design(ModelOrder { p: 2, q: 1, sp: 1, sq: 2, period: 4 }, &[0.3, -0.2], &[0.25], &[0.35], &[-0.2, 0.1], -0.4, 40.0);
    let series = simulated(&order, &params, 90, 5);
    let link = Link::logit();
    let jac = eta_jacobian(&order, &params, &series, &link).unwrap().stacked();
    let m = bsarma::burn_in(&order);
    let x = params.to_vec();
    for col in 0..order.n_coefficients() {
        let h = 1e-6;
        let eta_at = |d: f64| {
            let mut v = x.clone();
            v[col] += d;
            predictor_path(&order, &ParamVector::from_slice(&order, &v).unwrap(), &series, &link).unwrap().eta
        };
        let (up, dn) = (eta_at(h), eta_at(-h));
        for row in 0..jac.nrows() {
            let fd = (up[m + row] - dn[m + row]) / (2.0 * h);
            assert!((jac[(row, col)] - fd).abs() < 1e-6, "row {row} col {col}: {} vs {fd}", jac[(row, col)]);
        }
    }
}

#[test]
fn fisher_information_matches_score_outer_product() {
    // E[U Uᵀ] = E[K] at the true parameters.
    let (order, params) = design(ModelOrder { p: 1, q: 1, sp: 1, sq: 0, period: 4 }, &[0.4], &[0.2], &[0.3], &[], -0.6, 30.0);
    let link = Link::logit();
    let k = order.n_params();
    let reps = 600;
    let mut outer = vec![0.0; k * k];
    let mut info = vec![0.0; k * k];
    for rep in 0..reps {
        let series = simulated(&order, &params, 200, 1000 + rep);
        let u = score(&order, &params, &series, &link).unwrap();
        let kmat = fisher_information(&order, &params, &series, &link).unwrap();
        for i in 0..k {
            for j in 0..k {
                outer[i * k + j] += u[i] * u[j] / reps as f64;
                info[i * k + j] += kmat.matrix()[(i, j)] / reps as f64;
            }
        }
    }
    for i in 0..k {
        let rel = (outer[i * k + i] - info[i * k + i]).abs() / info[i * k + i];
        assert!(rel < 0.15, "diagonal {i}: outer {} vs info {}", outer[i * k + i], info[i * k + i]);
    }
}

#[test]
fn information_is_symmetric_positive_definite() {
    let (order, params) = design(ModelOrder { p: 1, q: 1, sp: 1, sq: 1, period: 12 }, &[-0.5], &[0.3], &[0.4], &[-0.35], -1.0, 120.0);
    let series = simulated(&order, &params, 300, 9);
    let info = fisher_information(&order, &params, &series, &Link::logit()).unwrap();
    let m = info.matrix();
    assert_eq!(m, &m.transpose());
    assert!(m.clone().cholesky().is_some());
    assert!(info.inverse().is_some());
}

#[test]
fn loglik_is_direct_sum_of_densities() {
    let (order, params) = design(ModelOrder { p: 1, q: 0, sp: 0, sq: 1, period: 3 }, &[0.5], &[], &[], &[0.2], 0.1, 15.0);
    let series = simulated(&order, &params, 40, 3);
    let link = Link::logit();
    let path = predictor_path(&order, &params, &series, &link).unwrap();
    let m = bsarma::burn_in(&order);
    let direct: f64 = (m..series.len())
        .map(|t| beta_log_density(series.values()[t], BetaParams::new(path.mu[t], 15.0).unwrap()).unwrap())
        .sum();
    let ll = conditional_loglik(&order, &params, &series, &link).unwrap();
    assert!((ll - direct).abs() < 1e-10);
}

#[test]
fn prepared_series_agrees_with_free_functions() {
    let (order, params) = design(ModelOrder { p: 1, q: 1, sp: 0, sq: 0, period: 1 }, &[0.3], &[], &[0.2], &[], 0.0, 20.0);
    let series = simulated(&order, &params, 50, 4);
    let link = Link::logit();
    let prep = PreparedSeries::new(&order, &series, &link).unwrap();
    let (ll, u) = prep.loglik_and_score(&params).unwrap();
    assert_eq!(ll, conditional_loglik(&order, &params, &series, &link).unwrap());
    assert_eq!(u, score(&order, &params, &series, &link).unwrap());
    assert_eq!(prep.n_effective(), 49);
}
