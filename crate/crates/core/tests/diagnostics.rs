use bsarma::diagnostics::{acf, information_criteria_raw, ljung_box, monti, pacf, qq_points, AcfDenominator, ResidualKind, ResidualSeries};
use bsarma::diagnostics::acf_with;
use bsarma::model::ModelOrder;
use bsarma::montecarlo::replication_rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = replication_rng(seed, 0);
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn weighted(values: Vec<f64>) -> ResidualSeries {
    ResidualSeries {
        kind: ResidualKind::Weighted,
        values,
    }
}

#[test]
fn white_noise_acf_inside_bands() {
    let n = 2000;
    let v = noise(n, 1);
    let r = acf(&v, 40).unwrap();
    let band = 1.96 / (n as f64).sqrt();
    let inside = r[1..].iter().filter(|x| x.abs() <= band).count();
    assert!(inside >= 34, "{inside} of 40");
}

#[test]
fn fixed_vector_statistics_match_scalar_oracle() {
    let v: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0 + 0.1 * i as f64).collect();
    let order = ModelOrder::arma(1, 0);
    let b = 5;
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let c0: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    let rho: Vec<f64> = (1..=b)
        .map(|k| (0..v.len() - k).map(|t| (v[t] - mean) * (v[t + k] - mean)).sum::<f64>() / c0)
        .collect();
    let q1: f64 = n * (n + 2.0) * (1..=b).map(|k| rho[k - 1].powi(2) / (n - k as f64)).sum::<f64>();
    let lb = ljung_box(&weighted(v.clone()), &order, b).unwrap();
    assert!((lb.statistic - q1).abs() < 1e-10);
    assert_eq!(lb.df, 4);

    let p = pacf(&v, b).unwrap();
    let q2: f64 = n * (n + 2.0) * (1..=b).map(|k| p[k - 1].powi(2) / (n - k as f64)).sum::<f64>();
    let mt = monti(&weighted(v), &order, b).unwrap();
    assert!((mt.statistic - q2).abs() < 1e-10);
}

#[test]
fn monti_power_rises_with_contamination() {
    let order = ModelOrder::arma(0, 0);
    let rate = |a: f64| {
        let mut hits = 0;
        for rep in 0..300 {
            let e = noise(150, 500 + rep);
            let mut x = vec![0.0; e.len()];
            for t in 0..e.len() {
                x[t] = e[t] + if t > 0 { a * x[t - 1] } else { 0.0 };
            }
            if monti(&weighted(x), &order, 10).unwrap().p_value <= 0.05 {
                hits += 1;
            }
        }
        hits as f64 / 300.0
    };
    let (r0, r1, r2) = (rate(0.0), rate(0.15), rate(0.35));
    assert!(r0 < r1 && r1 < r2, "{r0} {r1} {r2}");
}

#[test]
fn truncated_denominator_variant() {
    let v = noise(50, 3);
    let full = acf(&v, 3).unwrap();
    let trunc = acf_with(&v, 3, AcfDenominator::Truncated).unwrap();
    assert_eq!(trunc[0], 1.0);
    assert!(full[1].abs() <= trunc[1].abs() * 1.2 + 1e-12);
    assert_ne!(full[2], trunc[2]);
}

#[test]
fn information_criteria_examples() {
    let ic = information_criteria_raw(-100.0, 110, 10, 5);
    assert!((ic.maic - 230.0).abs() < 1e-12);
    let classic = information_criteria_raw(-50.0, 80, 0, 3);
    assert!((classic.maic - 106.0).abs() < 1e-12);
}

#[test]
fn qq_points_are_sorted_pairs() {
    let v = noise(101, 4);
    let q = qq_points(&v);
    assert_eq!(q.len(), 101);
    assert!(q.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    assert!(q[50].0.abs() < 1e-12);
}

proptest! {
    #[test]
    fn statistics_are_nonnegative(seed in 0u64..10_000, b in 3usize..12) {
        let v = noise(60, seed);
        let order = ModelOrder::arma(1, 1);
        let lb = ljung_box(&weighted(v.clone()), &order, b).unwrap();
        let mt = monti(&weighted(v), &order, b).unwrap();
        prop_assert!(lb.statistic >= 0.0 && mt.statistic >= 0.0);
        prop_assert!((0.0..=1.0).contains(&lb.p_value) && (0.0..=1.0).contains(&mt.p_value));
    }

    #[test]
    fn acf_bounded(seed in 0u64..10_000) {
        let r = acf(&noise(40, seed), 10).unwrap();
        prop_assert!(r.iter().all(|x| x.abs() <= 1.0 + 1e-12));
    }
}
