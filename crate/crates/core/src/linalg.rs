//! Dense helpers for the handful of tiny systems the estimators solve.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Inverse of a `k x k` row-major matrix by Gauss-Jordan elimination with
/// partial pivoting. `None` when (numerically) singular.
pub fn invert(k: usize, a: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), k * k);
    let w = 2 * k;
    let mut m = vec![0.0; k * w];
    for r in 0..k {
        m[r * w..r * w + k].copy_from_slice(&a[r * k..r * k + k]);
        m[r * w + k + r] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for c in 0..k {
        let p = (c..k)
            .max_by(|&i, &j| m[i * w + c].abs().total_cmp(&m[j * w + c].abs()))
            .expect("non-empty range");
        if m[p * w + c].abs() <= scale * 1e-13 {
            return None;
        }
        if p != c {
            for j in 0..w {
                m.swap(p * w + j, c * w + j);
            }
        }
        let d = m[c * w + c];
        for j in 0..w {
            m[c * w + j] /= d;
        }
        for r in 0..k {
            if r != c {
                let f = m[r * w + c];
                if f != 0.0 {
                    for j in 0..w {
                        m[r * w + j] -= f * m[c * w + j];
                    }
                }
            }
        }
    }
    let mut inv = vec![0.0; k * k];
    for r in 0..k {
        inv[r * k..r * k + k].copy_from_slice(&m[r * w + k..r * w + w]);
    }
    Some(inv)
}

/// Ordinary least squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Ols {
    pub beta: Vec<f64>,
    pub std_err: Vec<f64>,
    pub residual_variance: f64,
}

/// Regresses `y` on the rows of `x` (each of length `k`).
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> Option<Ols> {
    let n = y.len();
    let k = x.first()?.len();
    if n <= k || x.len() != n {
        return None;
    }
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in 0..k {
                xtx[i * k + j] += row[i] * row[j];
            }
        }
    }
    let inv = invert(k, &xtx)?;
    let beta: Vec<f64> = (0..k)
        .map(|i| (0..k).map(|j| inv[i * k + j] * xty[j]).sum())
        .collect();
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit) * (yi - fit)
        })
        .sum();
    let s2 = rss / (n - k) as f64;
    let std_err = (0..k).map(|i| (s2 * inv[i * k + i]).sqrt()).collect();
    Some(Ols {
        beta,
        std_err,
        residual_variance: s2,
    })
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a = [4.0, 7.0, 2.0, 6.0];
        let inv = invert(2, &a).unwrap();
        let expect = [0.6, -0.7, -0.2, 0.4];
        for (x, y) in inv.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(invert(2, &[1.0, 2.0, 2.0, 4.0]).is_none());
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 - 2.0 * i as f64).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.beta[0] - 3.0).abs() < 1e-10);
        assert!((fit.beta[1] + 2.0).abs() < 1e-10);
        assert!(fit.residual_variance < 1e-20);
        let (s, c) = line_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
    }
}
