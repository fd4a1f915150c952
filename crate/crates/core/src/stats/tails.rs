use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::StatsError;

/// Minimum number of upper order statistics used by the Hill estimator.
pub const MIN_EXCEEDANCES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HillVariant {
    /// `k / sum ln(x_(i) / x_(k+1))`.
    Classic,
    /// `(k - 1) / sum ln(x_(i) / x_(k+1))`, unbiased for exact Pareto tails.
    #[default]
    BiasCorrected,
}

/// Tail index of `|x|` from the largest `tail_fraction` of the nonzero
/// absolute values.
pub fn hill_estimator(x: &[f64], tail_fraction: f64, variant: HillVariant) -> Result<f64, StatsError> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(StatsError::InvalidArgument("tail fraction must lie in (0, 1)"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    let k = (tail_fraction * a.len() as f64) as usize;
    if k < MIN_EXCEEDANCES || k >= a.len() {
        return Err(StatsError::TooFewExceedances {
            needed: MIN_EXCEEDANCES,
            got: k,
        });
    }
    a.sort_by(|p, q| q.total_cmp(p));
    let threshold = a[k];
    let s: f64 = a[..k].iter().map(|v| (v / threshold).ln()).sum();
    if !(s > 0.0) {
        return Err(StatsError::Constant);
    }
    let numerator = match variant {
        HillVariant::Classic => k as f64,
        HillVariant::BiasCorrected => k as f64 - 1.0,
    };
    Ok(numerator / s)
}

fn sorted(x: &[f64]) -> Result<Vec<f64>, StatsError> {
    if x.is_empty() {
        return Err(StatsError::TooShort { needed: 1, got: 0 });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / core::f64::consts::SQRT_2))
}

/// One-sample Kolmogorov-Smirnov distance between `x` and the normal law
/// with the sample's own mean and standard deviation.
pub fn ks_normal(x: &[f64]) -> Result<f64, StatsError> {
    let v = sorted(x)?;
    if v.len() < 2 {
        return Err(StatsError::TooShort { needed: 2, got: v.len() });
    }
    let m = super::mean(&v);
    let sd = super::std_dev(&v);
    if !(sd > 0.0) {
        return Err(StatsError::Constant);
    }
    let n = v.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        let f = normal_cdf((v[i] - m) / sd);
        d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = j;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ks_edge_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), Ok(0.0));
        assert_eq!(ks_statistic(&a, &[10.0, 11.0]), Ok(1.0));
        assert_eq!(ks_statistic(&[1.0, 2.0], &[2.0, 3.0]), Ok(0.5));
        assert!(ks_statistic(&[], &a).is_err());
    }

    #[test]
    fn ks_normal_on_quantiles_is_small() {
        // Symmetric two-point sample: F jumps at +-1 standardised by sd = sqrt(2).
        let d = ks_normal(&[-1.0, 1.0]).unwrap();
        let f = normal_cdf(-1.0 / core::f64::consts::SQRT_2);
        assert!((d - (0.5 - f).max(f)).abs() < 1e-12);
    }

    #[test]
    fn hill_requires_exceedances() {
        let x = vec![1.0; 500];
        assert!(matches!(
            hill_estimator(&x, 0.05, HillVariant::BiasCorrected),
            Err(StatsError::TooFewExceedances { .. })
        ));
    }

    #[test]
    fn hill_on_exact_geometric_tail() {
        // Equal log-spacings of 1 / (100 a) turn the Hill sum into an arithmetic series.
        let a = 2.0;
        let x: Vec<f64> = (0..4000).map(|i| (i as f64 / a / 100.0).exp()).collect();
        let h = hill_estimator(&x, 0.05, HillVariant::Classic).unwrap();
        // sum_{i=1..k} i / (100 a) = k (k + 1) / (200 a)
        let k = 200.0;
        assert!((h - k / (k * (k + 1.0) / (200.0 * a))).abs() < 1e-9);
    }
}
