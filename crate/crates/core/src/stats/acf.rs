use alloc::vec::Vec;

use super::{require_len, StatsError};
use crate::book::{Side, Trade};

#[derive(Debug, Clone, PartialEq)]
pub struct AcfCurve {
    /// Estimates for lags `1..=max_lag`.
    pub values: Vec<f64>,
    pub demeaned: bool,
}

impl AcfCurve {
    pub fn max_lag(&self) -> usize {
        self.values.len()
    }

    /// Estimate at `lag`; lag 0 is 1 by definition.
    pub fn at(&self, lag: usize) -> Option<f64> {
        match lag {
            0 => Some(1.0),
            k => self.values.get(k - 1).copied(),
        }
    }

    /// Average estimate over lags `1..=max_lag`.
    pub fn mean_level(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Sample autocorrelation up to `max_lag`.
///
/// With `demean` this is the standard estimator
/// `sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2`, bounded by 1 in absolute
/// value. Without it the ratio `mean(x_t x_{t+k}) / mean(x_t^2)`, which is
/// the natural choice for ordinal series such as trade signs.
pub fn acf(x: &[f64], max_lag: usize, demean: bool) -> Result<AcfCurve, StatsError> {
    require_len(x, max_lag + 1)?;
    if max_lag == 0 {
        return Err(StatsError::InvalidArgument("max_lag must be at least 1"));
    }
    let n = x.len();
    let values = if demean {
        let m = super::mean(x);
        let d: Vec<f64> = x.iter().map(|v| v - m).collect();
        let c0: f64 = d.iter().map(|v| v * v).sum();
        if c0 <= 0.0 {
            return Err(StatsError::Constant);
        }
        (1..=max_lag)
            .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
            .collect()
    } else {
        let c0 = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if c0 <= 0.0 {
            return Err(StatsError::Constant);
        }
        (1..=max_lag)
            .map(|k| {
                let ck = x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>();
                ck / (n - k) as f64 / c0
            })
            .collect()
    };
    Ok(AcfCurve {
        values,
        demeaned: demean,
    })
}

/// `+1` for buyer-initiated and `-1` for seller-initiated trades, in order.
pub fn tradesign_series(trades: &[Trade]) -> Vec<f64> {
    trades
        .iter()
        .map(|t| match t.aggressor_side {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
        })
        .collect()
}
