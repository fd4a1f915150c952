use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::optim::nelder_mead;
use super::{require_len, StatsError};

/// 5% critical value of a chi-square with two degrees of freedom.
const LR_CRITICAL: f64 = 5.991;

/// Gaussian quasi-maximum-likelihood GARCH(1,1) fit of demeaned returns,
/// `s2_t = omega + alpha r2_{t-1} + beta s2_{t-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchFit {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub log_likelihood: f64,
    /// Log-likelihood of the constant-variance model.
    pub constant_log_likelihood: f64,
    pub converged: bool,
}

impl GarchFit {
    /// Likelihood-ratio test of the GARCH terms against constant variance
    /// at the 5% level.
    pub fn is_significant(&self) -> bool {
        2.0 * (self.log_likelihood - self.constant_log_likelihood) >= LR_CRITICAL
    }

    /// `alpha + beta`, or 0 when the GARCH terms are not significant (their
    /// sum is unidentified without conditional heteroscedasticity).
    pub fn persistence(&self) -> f64 {
        if self.is_significant() {
            self.alpha + self.beta
        } else {
            0.0
        }
    }
}

/// Maps unconstrained coordinates to `(omega, alpha, beta)` with
/// `omega > 0`, `alpha, beta > 0` and `alpha + beta < 1`.
fn transform(theta: &[f64]) -> (f64, f64, f64) {
    let m = theta[1].max(theta[2]).max(0.0);
    let (ea, eb, ec) = ((theta[1] - m).exp(), (theta[2] - m).exp(), (-m).exp());
    let z = ea + eb + ec;
    (theta[0].exp(), ea / z, eb / z)
}

fn inverse_transform(omega: f64, alpha: f64, beta: f64) -> [f64; 3] {
    let rest = 1.0 - alpha - beta;
    [omega.ln(), (alpha / rest).ln(), (beta / rest).ln()]
}

/// Gaussian log-likelihood without the `2 pi` constant. The recursion
/// starts from the sample variance.
fn log_likelihood(r2: &[f64], var: f64, omega: f64, alpha: f64, beta: f64) -> f64 {
    let mut s2 = var;
    let mut ll = 0.0;
    for (t, &x) in r2.iter().enumerate() {
        if t > 0 {
            s2 = omega + alpha * r2[t - 1] + beta * s2;
        }
        if !(s2 > 0.0) {
            return f64::NEG_INFINITY;
        }
        ll -= 0.5 * (s2.ln() + x / s2);
    }
    ll
}

pub fn garch11_fit(returns: &[f64]) -> Result<GarchFit, StatsError> {
    let starts = [(0.05, 0.90), (0.10, 0.80), (0.15, 0.60), (0.03, 0.30)];
    fit_from(returns, &starts, 2_000)
}

/// Single-start refit from a previous solution, used for bootstrap
/// resamples where a full multi-start search is too costly.
pub fn garch11_refit(returns: &[f64], warm: &GarchFit) -> Result<GarchFit, StatsError> {
    let a = warm.alpha.clamp(1e-4, 0.98);
    let b = warm.beta.clamp(1e-4, 0.999 - a);
    fit_from(returns, &[(a, b)], 500)
}

fn fit_from(returns: &[f64], starts: &[(f64, f64)], max_iter: usize) -> Result<GarchFit, StatsError> {
    require_len(returns, 500)?;
    let m = super::mean(returns);
    let sd = {
        let v = returns.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / returns.len() as f64;
        v.sqrt()
    };
    if !(sd > 0.0) {
        return Err(StatsError::Constant);
    }
    // Unit-variance scaling keeps the optimiser well conditioned; alpha and
    // beta are scale free and omega is mapped back at the end.
    let r2: Vec<f64> = returns.iter().map(|r| ((r - m) / sd).powi(2)).collect();
    let constant = log_likelihood(&r2, 1.0, 1.0, 0.0, 0.0);
    let objective = |theta: &[f64]| {
        let (o, a, b) = transform(theta);
        -log_likelihood(&r2, 1.0, o, a, b)
    };
    let mut best: Option<super::Minimum> = None;
    for &(a, b) in starts {
        let x0 = inverse_transform(1.0 - a - b, a, b);
        let m = nelder_mead(objective, &x0, 0.5, 1e-10, max_iter);
        if best.as_ref().is_none_or(|bm| m.value < bm.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let (omega, alpha, beta) = transform(&best.x);
    Ok(GarchFit {
        omega: omega * sd * sd,
        alpha,
        beta,
        log_likelihood: -best.value,
        constant_log_likelihood: constant,
        converged: best.converged,
    })
}

/// Persistence `alpha + beta` of the fitted GARCH(1,1) model, see
/// [`GarchFit::persistence`].
pub fn garch11_param_sum(returns: &[f64]) -> Result<f64, StatsError> {
    garch11_fit(returns).map(|f| f.persistence())
}
