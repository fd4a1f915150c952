mod support;

use marl_lob_core::stats::*;
use support::{arfima_0d0, gaussian, garch11, mean, pareto, random_walk, rng};

const DRAWS: u64 = 30;

fn averaged(f: impl Fn(u64) -> f64) -> f64 {
    mean(&(0..DRAWS).map(f).collect::<Vec<_>>())
}

#[test]
fn hurst_of_white_noise_is_one_half() {
    let h = averaged(|s| hurst_exponent(&gaussian(4096, &mut rng(100 + s))).unwrap());
    assert!((h - 0.5).abs() < 0.05, "H = {h}");
}

#[test]
fn hurst_of_cumulated_increments_tends_to_one() {
    let ramp: Vec<f64> = (0..2048).map(|i| i as f64).collect();
    assert!(hurst_exponent(&ramp).unwrap() > 0.9);
}

#[test]
fn gph_recovers_fractional_integration() {
    let d = averaged(|s| gph_estimate(&arfima_0d0(0.4, 4096, 2048, &mut rng(200 + s))).unwrap());
    assert!((d - 0.4).abs() < 0.1, "d = {d}");
    let d0 = averaged(|s| gph_estimate(&gaussian(4096, &mut rng(250 + s))).unwrap());
    assert!(d0.abs() < 0.1, "d = {d0}");
}

#[test]
fn hill_recovers_pareto_tails() {
    for alpha in [1.0, 2.0] {
        let a = averaged(|s| {
            hill_estimator(&pareto(alpha, 20_000, &mut rng(300 + s)), 0.05, HillVariant::BiasCorrected).unwrap()
        });
        assert!((a / alpha - 1.0).abs() < 0.1, "alpha {alpha}: {a}");
    }
}

#[test]
fn garch_recovers_persistence() {
    let p = averaged(|s| {
        let r = garch11(1e-6, 0.1, 0.85, 3000, 500, &mut rng(400 + s));
        garch11_param_sum(&r).unwrap()
    });
    assert!((p - 0.95).abs() < 0.05, "alpha + beta = {p}");
}

#[test]
fn garch_on_white_noise_is_not_significant() {
    let significant = (0..10)
        .filter(|s| garch11_fit(&gaussian(2000, &mut rng(450 + s))).unwrap().is_significant())
        .count();
    assert!(significant <= 3, "{significant} of 10");
}

#[test]
fn adf_separates_unit_root_from_noise() {
    let walk = averaged(|s| adf_statistic(&random_walk(2000, &mut rng(500 + s)), DEFAULT_ADF_LAGS).unwrap());
    let noise = averaged(|s| adf_statistic(&gaussian(2000, &mut rng(550 + s)), DEFAULT_ADF_LAGS).unwrap());
    assert!(walk - noise > 20.0, "walk {walk}, noise {noise}");
    // Dickey-Fuller 5% critical value with a constant is about -2.86.
    assert!(walk > -2.86);
}

#[test]
fn ks_matches_direct_ecdf_supremum() {
    let mut r = rng(600);
    let a = gaussian(300, &mut r);
    let b: Vec<f64> = gaussian(200, &mut r).iter().map(|v| v + 0.3).collect();
    let ecdf = |x: &[f64], t: f64| x.iter().filter(|&&v| v <= t).count() as f64 / x.len() as f64;
    let direct = a
        .iter()
        .chain(&b)
        .map(|&t| (ecdf(&a, t) - ecdf(&b, t)).abs())
        .fold(0.0, f64::max);
    assert!((ks_statistic(&a, &b).unwrap() - direct).abs() < 1e-12);
    assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
}

#[test]
fn acf_matches_direct_sums() {
    let x = gaussian(500, &mut rng(700));
    let m = mean(&x);
    let var: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let curve = acf(&x, 10, true).unwrap();
    for k in 1..=10 {
        let c: f64 = (0..x.len() - k).map(|t| (x[t] - m) * (x[t + k] - m)).sum();
        assert!((curve.at(k).unwrap() - c / var).abs() < 1e-12);
    }
    let raw = acf(&x, 10, false).unwrap();
    let m2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    for k in 1..=10 {
        let c = (0..x.len() - k).map(|t| x[t] * x[t + k]).sum::<f64>() / (x.len() - k) as f64;
        assert!((raw.at(k).unwrap() - c / m2).abs() < 1e-12);
    }
}

#[test]
fn moment_report_fills_every_row_for_a_long_series() {
    let mut r = rng(800);
    let mut p = 100.0;
    let prices: Vec<f64> = garch11(1e-6, 0.1, 0.85, 6000, 200, &mut r)
        .into_iter()
        .map(|x| {
            p *= x.exp();
            p
        })
        .collect();
    let cfg = MomentConfig {
        resamples: 50,
        garch_resamples: 10,
        ..MomentConfig::default()
    };
    let rep = moment_report(&prices, None, &cfg);
    for (name, m) in rep.rows() {
        let m = m.as_ref().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(m.ci_low <= m.value && m.value <= m.ci_high, "{name}");
    }
}
