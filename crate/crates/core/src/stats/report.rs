use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};

use super::tails::{hill_estimator, ks_normal, ks_statistic, HillVariant};
use super::{adf_statistic, garch, gph_estimate, hurst_exponent, log_returns, StatsError};
use crate::rng::{derive_seed, SimRng};

pub const MOMENT_NAMES: [&str; 8] = ["mean", "std", "ks", "hurst", "gph", "adf", "garch", "hill"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    /// Bootstrap resamples per estimator.
    pub resamples: usize,
    /// Resamples for the GARCH interval, whose refits dominate the cost.
    pub garch_resamples: usize,
    /// Two-sided coverage of the percentile intervals.
    pub confidence: f64,
    pub seed: u64,
    pub adf_lags: usize,
    pub hill_fraction: f64,
    pub hill_variant: HillVariant,
}

impl Default for MomentConfig {
    fn default() -> Self {
        MomentConfig {
            resamples: 1000,
            garch_resamples: 200,
            confidence: 0.975,
            seed: 0x5EED,
            adf_lags: super::DEFAULT_ADF_LAGS,
            hill_fraction: 0.05,
            hill_variant: HillVariant::BiasCorrected,
        }
    }
}

/// Point estimate with its bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub n_returns: usize,
    pub mean: Result<Moment, StatsError>,
    pub std: Result<Moment, StatsError>,
    /// Against the reference returns when given, else against a fitted normal.
    pub ks: Result<Moment, StatsError>,
    pub hurst: Result<Moment, StatsError>,
    /// Of absolute returns.
    pub gph: Result<Moment, StatsError>,
    pub adf: Result<Moment, StatsError>,
    pub garch: Result<Moment, StatsError>,
    pub hill: Result<Moment, StatsError>,
}

impl MomentReport {
    /// The eight estimates in [`MOMENT_NAMES`] order.
    pub fn rows(&self) -> [(&'static str, &Result<Moment, StatsError>); 8] {
        [
            ("mean", &self.mean),
            ("std", &self.std),
            ("ks", &self.ks),
            ("hurst", &self.hurst),
            ("gph", &self.gph),
            ("adf", &self.adf),
            ("garch", &self.garch),
            ("hill", &self.hill),
        ]
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Moving-block bootstrap percentile interval of `stat` over `x`, with
/// blocks of `floor(sqrt(n))` consecutive values. Resamples on which the
/// statistic fails are dropped; `None` if fewer than two succeed.
pub fn block_bootstrap_ci<F>(
    x: &[f64],
    mut stat: F,
    resamples: usize,
    confidence: f64,
    rng: &mut SimRng,
) -> Option<(f64, f64)>
where
    F: FnMut(&[f64]) -> Result<f64, StatsError>,
{
    let n = x.len();
    if n < 2 {
        return None;
    }
    let block = ((n as f64).sqrt() as usize).max(1);
    let mut buf = Vec::with_capacity(n + block);
    let mut draws = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        buf.clear();
        while buf.len() < n {
            let start = rng.random_range(0..=n - block);
            buf.extend_from_slice(&x[start..start + block]);
        }
        buf.truncate(n);
        if let Ok(v) = stat(&buf) {
            if v.is_finite() {
                draws.push(v);
            }
        }
    }
    if draws.len() < 2 {
        return None;
    }
    draws.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Some((quantile(&draws, tail), quantile(&draws, 1.0 - tail)))
}

fn moment<F>(r: &[f64], mut stat: F, resamples: usize, cfg: &MomentConfig, stream: u64) -> Result<Moment, StatsError>
where
    F: FnMut(&[f64]) -> Result<f64, StatsError>,
{
    let value = stat(r)?;
    bootstrap_around(value, r, stat, resamples, cfg, stream)
}

fn bootstrap_around<F>(
    value: f64,
    r: &[f64],
    stat: F,
    resamples: usize,
    cfg: &MomentConfig,
    stream: u64,
) -> Result<Moment, StatsError>
where
    F: FnMut(&[f64]) -> Result<f64, StatsError>,
{
    let mut rng = SimRng::seed_from_u64(derive_seed(cfg.seed, stream));
    let (lo, hi) = block_bootstrap_ci(r, stat, resamples, cfg.confidence, &mut rng).unwrap_or((value, value));
    // Percentile intervals can miss a skewed point estimate; widen to keep it.
    Ok(Moment {
        value,
        ci_low: lo.min(value),
        ci_high: hi.max(value),
    })
}

/// All eight moments of the log-returns of `prices`.
pub fn moment_report(prices: &[f64], reference_returns: Option<&[f64]>, cfg: &MomentConfig) -> MomentReport {
    let r = log_returns(prices);
    let n = cfg.resamples;
    let finite = if r.len() < 2 {
        Err(StatsError::TooShort { needed: 2, got: r.len() })
    } else if r.iter().any(|v| !v.is_finite()) {
        Err(StatsError::NonFinite)
    } else {
        Ok(())
    };
    let guard = |f: &dyn Fn() -> Result<Moment, StatsError>| finite.clone().and_then(|_| f());

    MomentReport {
        n_returns: r.len(),
        mean: guard(&|| moment(&r, |x| Ok(super::mean(x)), n, cfg, 0)),
        std: guard(&|| moment(&r, |x| Ok(super::std_dev(x)), n, cfg, 1)),
        ks: guard(&|| match reference_returns {
            Some(reference) => moment(&r, |x| ks_statistic(x, reference), n, cfg, 2),
            None => moment(&r, ks_normal, n, cfg, 2),
        }),
        hurst: guard(&|| moment(&r, hurst_exponent, n, cfg, 3)),
        gph: guard(&|| {
            moment(
                &r,
                |x| gph_estimate(&x.iter().map(|v| v.abs()).collect::<Vec<_>>()),
                n,
                cfg,
                4,
            )
        }),
        adf: guard(&|| moment(&r, |x| adf_statistic(x, cfg.adf_lags), n, cfg, 5)),
        garch: guard(&|| {
            let fit = garch::garch11_fit(&r)?;
            bootstrap_around(
                fit.persistence(),
                &r,
                |x| garch::garch11_refit(x, &fit).map(|f| f.persistence()),
                cfg.garch_resamples,
                cfg,
                6,
            )
        }),
        hill: guard(&|| moment(&r, |x| hill_estimator(x, cfg.hill_fraction, cfg.hill_variant), n, cfg, 7)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.125), 0.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn bootstrap_of_constant_statistic() {
        let x: alloc::vec::Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut rng = SimRng::seed_from_u64(1);
        let ci = block_bootstrap_ci(&x, |_| Ok(3.0), 50, 0.975, &mut rng).unwrap();
        assert_eq!(ci, (3.0, 3.0));
        let ci = block_bootstrap_ci(&x, |s| Ok(super::super::mean(s)), 200, 0.975, &mut rng).unwrap();
        assert!(ci.0 < 49.5 && ci.1 > 49.5);
    }

    #[test]
    fn short_series_marks_every_moment_absent() {
        let rep = moment_report(&[1.0], None, &MomentConfig::default());
        assert!(rep.rows().iter().all(|(_, m)| m.is_err()));
    }
}
