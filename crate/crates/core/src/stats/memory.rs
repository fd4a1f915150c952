use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use super::{require_len, StatsError};
use crate::linalg::line_fit;

const MIN_WINDOW: usize = 16;

/// Rescaled-range Hurst exponent.
///
/// R/S is averaged over non-overlapping dyadic windows from 16 points up to
/// half the series. The raw R/S slope is biased upwards in small windows, so
/// each point is divided by the Anis-Lloyd expected R/S of an iid series of
/// that window length and the exponent is reported as `0.5 + slope`.
pub fn hurst_exponent(x: &[f64]) -> Result<f64, StatsError> {
    require_len(x, 256)?;
    let n = x.len();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut w = MIN_WINDOW;
    while w <= n / 2 {
        if let Some(rs) = mean_rescaled_range(x, w) {
            lx.push((w as f64).ln());
            ly.push(rs.ln() - expected_rescaled_range(w).ln());
        }
        w *= 2;
    }
    let (slope, _) = line_fit(&lx, &ly).ok_or(StatsError::Constant)?;
    Ok(0.5 + slope)
}

fn mean_rescaled_range(x: &[f64], w: usize) -> Option<f64> {
    let mut total = 0.0;
    let mut used = 0usize;
    for chunk in x.chunks_exact(w) {
        let m = chunk.iter().sum::<f64>() / w as f64;
        let mut y = 0.0;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let mut ss = 0.0;
        for v in chunk {
            y += v - m;
            lo = lo.min(y);
            hi = hi.max(y);
            ss += (v - m) * (v - m);
        }
        let s = (ss / w as f64).sqrt();
        if s > 0.0 {
            total += (hi - lo) / s;
            used += 1;
        }
    }
    (used > 0).then(|| total / used as f64)
}

/// Anis-Lloyd expected R/S of `n` iid observations with the Peters
/// `(n - 1/2) / n` factor.
pub(crate) fn expected_rescaled_range(n: usize) -> f64 {
    let nf = n as f64;
    let sum: f64 = (1..n).map(|i| ((nf - i as f64) / i as f64).sqrt()).sum();
    let ratio = (libm::lgamma((nf - 1.0) / 2.0) - libm::lgamma(nf / 2.0)).exp() / PI.sqrt();
    (nf - 0.5) / nf * ratio * sum
}

/// Geweke and Porter-Hudak long-memory parameter `d`: slope of the log
/// periodogram on `-ln(4 sin^2(lambda / 2))` at the lowest `floor(sqrt(n))`
/// Fourier frequencies.
pub fn gph_estimate(x: &[f64]) -> Result<f64, StatsError> {
    require_len(x, 512)?;
    let n = x.len();
    let m = (n as f64).sqrt() as usize;
    let mean = super::mean(x);
    let mut reg = Vec::with_capacity(m);
    let mut logp = Vec::with_capacity(m);
    for j in 1..=m {
        let lambda = 2.0 * PI * j as f64 / n as f64;
        let p = goertzel_power(x, mean, lambda) / (2.0 * PI * n as f64);
        if p <= 0.0 {
            return Err(StatsError::Constant);
        }
        let s = (lambda / 2.0).sin();
        reg.push(-(4.0 * s * s).ln());
        logp.push(p.ln());
    }
    let (d, _) = line_fit(&reg, &logp).ok_or(StatsError::Singular)?;
    Ok(d)
}

/// `|sum (x_t - mean) e^{-i lambda t}|^2`.
fn goertzel_power(x: &[f64], mean: f64, lambda: f64) -> f64 {
    let c = 2.0 * lambda.cos();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for v in x {
        let s = (v - mean) + c * s1 - s2;
        s2 = s1;
        s1 = s;
    }
    (s1 * s1 + s2 * s2 - c * s1 * s2).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goertzel_matches_direct_dft() {
        let x: Vec<f64> = (0..64).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let mean = super::super::mean(&x);
        for j in 1..5 {
            let lambda = 2.0 * PI * j as f64 / 64.0;
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                re += (v - mean) * (lambda * t as f64).cos();
                im -= (v - mean) * (lambda * t as f64).sin();
            }
            let direct = re * re + im * im;
            assert!((goertzel_power(&x, mean, lambda) - direct).abs() < 1e-8 * direct.max(1.0));
        }
    }

    #[test]
    fn expected_rs_small_case() {
        // n = 2: (1.5/2) * Gamma(1/2) / (sqrt(pi) Gamma(1)) * sqrt(1) = 0.75
        assert!((expected_rescaled_range(2) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn linear_trend_is_persistent() {
        let x: Vec<f64> = (1..=4096).map(|i| i as f64).collect();
        assert!(hurst_exponent(&x).unwrap() > 0.9);
    }

    #[test]
    fn short_input_rejected() {
        assert_eq!(
            hurst_exponent(&[0.0; 10]),
            Err(StatsError::TooShort { needed: 256, got: 10 })
        );
        assert!(matches!(gph_estimate(&[0.0; 100]), Err(StatsError::TooShort { .. })));
        assert_eq!(gph_estimate(&[1.0; 600]), Err(StatsError::Constant));
    }
}
