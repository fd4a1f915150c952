use alloc::vec;
use alloc::vec::Vec;

use super::{require_len, StatsError};
use crate::linalg::ols;

pub const DEFAULT_ADF_LAGS: usize = 1;

/// Augmented Dickey-Fuller t-statistic with a constant, no trend and a fixed
/// number of lagged differences:
/// `dy_t = c + g y_{t-1} + sum_i phi_i dy_{t-i} + e_t`, returns `g / se(g)`.
pub fn adf_statistic(y: &[f64], lags: usize) -> Result<f64, StatsError> {
    require_len(y, 100.max(lags + 10))?;
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut rows = Vec::with_capacity(dy.len());
    let mut resp = Vec::with_capacity(dy.len());
    for t in lags..dy.len() {
        let mut row = vec![1.0, y[t]];
        row.extend((1..=lags).map(|i| dy[t - i]));
        rows.push(row);
        resp.push(dy[t]);
    }
    let fit = ols(&rows, &resp).ok_or(StatsError::Singular)?;
    if !(fit.std_err[1] > 0.0) {
        return Err(StatsError::Singular);
    }
    Ok(fit.beta[1] / fit.std_err[1])
}
