//! Stylised-fact estimators.
//!
//! Every function here is pure: the same input slice gives the same output
//! bits. Bootstrap intervals draw from an explicitly seeded generator.

mod acf;
mod adf;
mod garch;
mod impact;
mod memory;
mod optim;
mod report;
mod tails;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

pub use acf::{acf, tradesign_series, AcfCurve};
pub use adf::{adf_statistic, DEFAULT_ADF_LAGS};
pub use garch::{garch11_fit, garch11_param_sum, garch11_refit, GarchFit};
pub use impact::{
    impact_observations, price_impact_curves, ImpactBins, ImpactObservation, PriceImpactCurve,
};
pub use memory::{gph_estimate, hurst_exponent};
pub use optim::{nelder_mead, Minimum};
pub use report::{block_bootstrap_ci, moment_report, Moment, MomentConfig, MomentReport, MOMENT_NAMES};
pub use tails::{hill_estimator, ks_normal, ks_statistic, HillVariant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series is constant")]
    Constant,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("regression is singular")]
    Singular,
    #[error("too few tail exceedances: need {needed}, got {got}")]
    TooFewExceedances { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub(crate) fn require_len(x: &[f64], needed: usize) -> Result<(), StatsError> {
    if x.len() < needed {
        return Err(StatsError::TooShort {
            needed,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Log-returns of a positive price series.
pub fn log_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}
