//! Delay embedding and Grassberger-Procaccia correlation dimension.
//!
//! Distances use the max norm. Pairs closer in time than the Theiler window
//! are left out of the correlation integral so that serial correlation does
//! not masquerade as low dimensionality.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::linalg::line_fit;
use crate::stats::acf;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexityError {
    #[error("series too short: need more than {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("need at least two points outside the Theiler window")]
    TooFewPoints,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingConfig {
    pub dimension: usize,
    pub delay: usize,
    pub theiler_window: usize,
}

impl EmbeddingConfig {
    pub fn validate(&self, len: usize) -> Result<(), ComplexityError> {
        if self.dimension == 0 || self.delay == 0 {
            return Err(ComplexityError::InvalidConfig("dimension and delay must be at least 1"));
        }
        let needed = (self.dimension - 1) * self.delay + self.theiler_window;
        if len <= needed {
            return Err(ComplexityError::TooShort { needed, got: len });
        }
        Ok(())
    }
}

/// Points in `R^dim` with the time index each was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    times: Vec<usize>,
}

impl PointCloud {
    /// Cloud from explicit points; time indices are the positions.
    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self, ComplexityError> {
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(ComplexityError::InvalidConfig("every point needs `dim` coordinates"));
        }
        let coords: Vec<f64> = points.iter().flatten().copied().collect();
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(ComplexityError::NonFinite);
        }
        Ok(PointCloud {
            dim,
            coords,
            times: (0..points.len()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn time(&self, i: usize) -> usize {
        self.times[i]
    }

    /// Every `stride`-th point (time indices are kept).
    pub fn decimate(&self, stride: usize) -> PointCloud {
        let stride = stride.max(1);
        let keep: Vec<usize> = (0..self.len()).step_by(stride).collect();
        PointCloud {
            dim: self.dim,
            coords: keep.iter().flat_map(|&i| self.point(i).iter().copied()).collect(),
            times: keep.iter().map(|&i| self.times[i]).collect(),
        }
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()))
    }

    fn for_each_pair(&self, theiler: usize, mut f: impl FnMut(f64)) {
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.times[i].abs_diff(self.times[j]) > theiler {
                    f(self.distance(i, j));
                }
            }
        }
    }
}

/// First local minimum of the demeaned autocorrelation, else its first
/// zero crossing, else `max_lag`.
pub fn correlation_time(series: &[f64], max_lag: usize) -> usize {
    let max_lag = max_lag.min(series.len().saturating_sub(2)).max(1);
    let Ok(curve) = acf(series, max_lag, true) else {
        return max_lag;
    };
    let rho = |k: usize| curve.at(k).expect("lag in range");
    for k in 1..max_lag {
        if rho(k) < rho(k - 1) && rho(k) < rho(k + 1) {
            return k;
        }
    }
    (1..=max_lag).find(|&k| rho(k) <= 0.0).unwrap_or(max_lag)
}

/// Points `y_t = (x_t, x_{t - tau}, ..., x_{t - (m - 1) tau})` for every `t`
/// with a full history.
pub fn delay_embed(series: &[f64], cfg: &EmbeddingConfig) -> Result<PointCloud, ComplexityError> {
    cfg.validate(series.len())?;
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ComplexityError::NonFinite);
    }
    let start = (cfg.dimension - 1) * cfg.delay;
    let times: Vec<usize> = (start..series.len()).collect();
    let coords = times
        .iter()
        .flat_map(|&t| (0..cfg.dimension).map(move |k| series[t - k * cfg.delay]))
        .collect();
    Ok(PointCloud {
        dim: cfg.dimension,
        coords,
        times,
    })
}

/// Number of admissible pairs with distance strictly below each radius, and
/// the number of admissible pairs. `radii` must be non-decreasing.
pub fn correlation_counts(cloud: &PointCloud, radii: &[f64], theiler: usize) -> (Vec<u64>, u64) {
    let mut hist = vec![0u64; radii.len() + 1];
    let mut total = 0u64;
    cloud.for_each_pair(theiler, |d| {
        total += 1;
        hist[radii.partition_point(|&r| r <= d)] += 1;
    });
    let mut counts = Vec::with_capacity(radii.len());
    let mut acc = 0u64;
    for h in &hist[..radii.len()] {
        acc += h;
        counts.push(acc);
    }
    (counts, total)
}

/// Correlation integral `C(r)`: the fraction of admissible pairs (time gap
/// above `theiler`) closer than `r`.
pub fn correlation_integral(cloud: &PointCloud, radii: &[f64], theiler: usize) -> Result<Vec<f64>, ComplexityError> {
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(ComplexityError::InvalidConfig("radii must be non-decreasing"));
    }
    let (counts, total) = correlation_counts(cloud, radii, theiler);
    if total == 0 {
        return Err(ComplexityError::TooFewPoints);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// How the radii of a correlation curve are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusRange {
    /// `count` log-spaced radii between two quantiles of the positive pair
    /// distances.
    Percentiles { lo: f64, hi: f64, count: usize },
    Explicit(Vec<f64>),
}

impl Default for RadiusRange {
    fn default() -> Self {
        RadiusRange::Percentiles {
            lo: 0.01,
            hi: 0.5,
            count: 40,
        }
    }
}

/// Clouds larger than this are decimated before quantiles are taken.
const QUANTILE_POINTS: usize = 2_000;

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 || hi <= lo {
        return vec![lo; count.max(1)];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Concrete radii for `cloud`. A cloud whose pairs all coincide gets
/// radii on `[1e-3, 1]`, where its integral is identically one.
pub fn resolve_radii(cloud: &PointCloud, range: &RadiusRange, theiler: usize) -> Result<Vec<f64>, ComplexityError> {
    match range {
        RadiusRange::Explicit(r) => {
            if r.is_empty() || r.iter().any(|&v| !(v > 0.0)) || r.windows(2).any(|w| w[0] > w[1]) {
                return Err(ComplexityError::InvalidConfig("radii must be positive and non-decreasing"));
            }
            Ok(r.clone())
        }
        &RadiusRange::Percentiles { lo, hi, count } => {
            if !(0.0 <= lo && lo < hi && hi <= 1.0) || count == 0 {
                return Err(ComplexityError::InvalidConfig("need 0 <= lo < hi <= 1 and count > 0"));
            }
            let stride = cloud.len().div_ceil(QUANTILE_POINTS).max(1);
            let sample = cloud.decimate(stride);
            let mut d = Vec::new();
            sample.for_each_pair(theiler, |x| {
                if x > 0.0 {
                    d.push(x)
                }
            });
            if d.is_empty() {
                return Ok(log_spaced(1e-3, 1.0, count));
            }
            d.sort_by(f64::total_cmp);
            let q = |p: f64| d[((p * (d.len() - 1) as f64).round() as usize).min(d.len() - 1)];
            Ok(log_spaced(q(lo), q(hi), count))
        }
    }
}

/// Correlation curve and the dimension fitted over its scaling region.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub radii: Vec<f64>,
    pub integral: Vec<f64>,
    pub dimension: f64,
    /// Inclusive radius indices of the fitted region.
    pub region: (usize, usize),
    /// False when no stable region existed and the whole range was fitted.
    pub scaling_found: bool,
}

/// Maximum relative spread of local slopes inside a scaling region.
pub const SLOPE_TOLERANCE: f64 = 0.15;

/// Fits `ln C` against `ln r` over the longest run of radii whose local
/// slopes stay within [`SLOPE_TOLERANCE`] of their mean; ties go to the
/// smaller radii.
pub fn fit_dimension(radii: &[f64], integral: &[f64]) -> CorrelationCurve {
    let usable: Vec<usize> = (0..radii.len()).filter(|&i| integral[i] > 0.0 && radii[i] > 0.0).collect();
    let lx: Vec<f64> = usable.iter().map(|&i| radii[i].ln()).collect();
    let ly: Vec<f64> = usable.iter().map(|&i| integral[i].ln()).collect();
    let slopes: Vec<f64> = (1..lx.len())
        .map(|j| {
            let dx = lx[j] - lx[j - 1];
            if dx > 0.0 {
                (ly[j] - ly[j - 1]) / dx
            } else {
                f64::NAN
            }
        })
        .collect();

    // Longest window [a, b] of slopes (at least 3) with a stable spread.
    let mut best: Option<(usize, usize)> = None;
    for a in 0..slopes.len() {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for b in a..slopes.len() {
            let s = slopes[b];
            if !s.is_finite() {
                break;
            }
            lo = lo.min(s);
            hi = hi.max(s);
            sum += s;
            let mean = sum / (b - a + 1) as f64;
            if hi - lo > SLOPE_TOLERANCE * mean.abs() {
                break;
            }
            if b - a + 1 >= 3 && best.is_none_or(|(x, y)| b - a > y - x) {
                best = Some((a, b));
            }
        }
    }

    let flat = ly.iter().all(|&v| v == 0.0) && !ly.is_empty();
    let (scaling_found, (a, b)) = match best {
        Some((a, b)) => (true, (a, b + 1)),
        None => (flat, (0, lx.len().saturating_sub(1))),
    };
    let dimension = if flat {
        0.0
    } else {
        line_fit(&lx[a..=b.max(a)], &ly[a..=b.max(a)]).map_or(f64::NAN, |(s, _)| s)
    };
    let region = if usable.is_empty() {
        (0, 0)
    } else {
        (usable[a], usable[b.max(a)])
    };
    CorrelationCurve {
        radii: radii.to_vec(),
        integral: integral.to_vec(),
        dimension,
        region,
        scaling_found,
    }
}

/// Correlation dimension of an explicit cloud.
pub fn cloud_dimension(cloud: &PointCloud, radii: &RadiusRange, theiler: usize) -> Result<CorrelationCurve, ComplexityError> {
    let r = resolve_radii(cloud, radii, theiler)?;
    let c = correlation_integral(cloud, &r, theiler)?;
    Ok(fit_dimension(&r, &c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionOptions {
    /// Largest lag searched for the correlation time.
    pub max_lag: usize,
    /// Delay; the correlation time when `None`.
    pub delay: Option<usize>,
    /// Theiler window; the delay when `None`.
    pub theiler_window: Option<usize>,
    pub radii: RadiusRange,
    /// Embedded clouds are decimated to at most this many points.
    pub max_points: usize,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        DimensionOptions {
            max_lag: 100,
            delay: None,
            theiler_window: None,
            radii: RadiusRange::default(),
            max_points: 2_000,
        }
    }
}

/// Correlation dimension of `series` embedded in `m` dimensions.
pub fn correlation_dimension(series: &[f64], m: usize, opts: &DimensionOptions) -> Result<CorrelationCurve, ComplexityError> {
    let delay = opts.delay.unwrap_or_else(|| correlation_time(series, opts.max_lag));
    let theiler = opts.theiler_window.unwrap_or(delay);
    embedded_dimension(series, m, delay, theiler, opts)
}

fn embedded_dimension(
    series: &[f64],
    m: usize,
    delay: usize,
    theiler: usize,
    opts: &DimensionOptions,
) -> Result<CorrelationCurve, ComplexityError> {
    let cloud = delay_embed(
        series,
        &EmbeddingConfig {
            dimension: m,
            delay,
            theiler_window: theiler,
        },
    )?;
    let stride = cloud.len().div_ceil(opts.max_points.max(2)).max(1);
    cloud_dimension(&cloud.decimate(stride), &opts.radii, theiler)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionCurve {
    pub delay: usize,
    pub theiler_window: usize,
    /// `(m, curve)` per embedding dimension.
    pub points: Vec<(usize, CorrelationCurve)>,
}

impl DimensionCurve {
    pub fn dimension_at(&self, m: usize) -> Option<f64> {
        self.points.iter().find(|(k, _)| *k == m).map(|(_, c)| c.dimension)
    }
}

/// `D(m)` over `m_range` with one delay (the correlation time unless
/// overridden) shared by every `m`.
pub fn dimension_vs_embedding(
    series: &[f64],
    m_range: RangeInclusive<usize>,
    opts: &DimensionOptions,
) -> Result<DimensionCurve, ComplexityError> {
    if m_range.is_empty() || *m_range.start() == 0 {
        return Err(ComplexityError::InvalidConfig("embedding range must be non-empty and start at 1 or more"));
    }
    let delay = opts.delay.unwrap_or_else(|| correlation_time(series, opts.max_lag));
    let theiler = opts.theiler_window.unwrap_or(delay);
    let points = m_range
        .map(|m| embedded_dimension(series, m, delay, theiler, opts).map(|c| (m, c)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DimensionCurve {
        delay,
        theiler_window: theiler,
        points,
    })
}

/// Mean dimension difference `config - baseline` over their common
/// embedding dimensions, and over the upper half of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaDimension {
    pub all: f64,
    pub high: f64,
    pub common: usize,
}

pub fn delta_dimension(config: &DimensionCurve, baseline: &DimensionCurve) -> Option<DeltaDimension> {
    let diffs: Vec<f64> = config
        .points
        .iter()
        .filter_map(|(m, c)| baseline.dimension_at(*m).map(|b| c.dimension - b))
        .collect();
    if diffs.is_empty() {
        return None;
    }
    let upper = &diffs[diffs.len() / 2..];
    Some(DeltaDimension {
        all: diffs.iter().sum::<f64>() / diffs.len() as f64,
        high: upper.iter().sum::<f64>() / upper.len() as f64,
        common: diffs.len(),
    })
}

/// Two-dimensional phase portrait `(x_t, x_{t - tau})` with one highlighted
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpace {
    pub delay: usize,
    /// `(t, x_t, x_{t - tau})` for `t >= tau`.
    pub points: Vec<(usize, f64, f64)>,
    /// Half-open range of `t` values in the highlighted window.
    pub highlight: (usize, usize),
}

/// Phase portrait with the `segment_length` window around the largest
/// absolute one-step move highlighted.
pub fn phase_space_export(series: &[f64], delay: usize, segment_length: usize) -> Result<PhaseSpace, ComplexityError> {
    if delay == 0 || segment_length == 0 {
        return Err(ComplexityError::InvalidConfig("delay and segment length must be positive"));
    }
    let n = series.len();
    if n <= delay + segment_length {
        return Err(ComplexityError::TooShort {
            needed: delay + segment_length,
            got: n,
        });
    }
    let jump = (delay.max(1)..n)
        .max_by(|&a, &b| {
            let da = (series[a] - series[a - 1]).abs();
            let db = (series[b] - series[b - 1]).abs();
            // Earliest index wins ties.
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .expect("n > delay");
    let start = jump.saturating_sub(segment_length / 2).clamp(delay, n - segment_length);
    Ok(PhaseSpace {
        delay,
        points: (delay..n).map(|t| (t, series[t], series[t - delay])).collect(),
        highlight: (start, start + segment_length),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_examples() {
        let cfg = |m, d| EmbeddingConfig {
            dimension: m,
            delay: d,
            theiler_window: 0,
        };
        let c = delay_embed(&[1.0, 2.0, 3.0], &cfg(2, 1)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.point(0), &[2.0, 1.0]);
        assert_eq!(c.point(1), &[3.0, 2.0]);
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(delay_embed(&x, &cfg(2, 10)).unwrap().len(), 990);
        let one = delay_embed(&x[..5], &cfg(1, 3)).unwrap();
        assert_eq!((0..5).map(|i| one.point(i)[0]).collect::<Vec<_>>(), x[..5].to_vec());
        assert!(delay_embed(&x[..10], &cfg(3, 5)).is_err());
    }

    #[test]
    fn integral_edge_cases() {
        let same = PointCloud::from_points(2, &[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(correlation_integral(&same, &[1e-9, 1.0], 0).unwrap(), vec![1.0, 1.0]);
        let two = PointCloud::from_points(1, &[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(correlation_integral(&two, &[0.5, 2.0], 0).unwrap(), vec![0.0, 1.0]);
        // Strict inequality: a pair at exactly r is not counted.
        assert_eq!(correlation_integral(&two, &[1.0], 0).unwrap(), vec![0.0]);
        assert_eq!(correlation_integral(&two, &[1.0], 1), Err(ComplexityError::TooFewPoints));
    }

    #[test]
    fn cosine_correlation_time() {
        let x: Vec<f64> = (0..2000)
            .map(|i| (2.0 * core::f64::consts::PI * i as f64 / 20.0).cos())
            .collect();
        assert_eq!(correlation_time(&x, 50), 10);
        let ramp: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(correlation_time(&ramp, 10) <= 10);
    }

    #[test]
    fn repeated_point_has_zero_dimension() {
        let x = vec![3.0; 500];
        let c = correlation_dimension(&x, 2, &DimensionOptions {
            delay: Some(1),
            ..DimensionOptions::default()
        })
        .unwrap();
        assert_eq!(c.dimension, 0.0);
    }

    #[test]
    fn phase_space_window() {
        let mut x: Vec<f64> = (0..10_000).map(|i| (i % 7) as f64).collect();
        x[6000] += 100.0;
        let ps = phase_space_export(&x, 10, 250).unwrap();
        assert_eq!(ps.highlight.1 - ps.highlight.0, 250);
        assert!(ps.highlight.0 <= 6000 && 6000 < ps.highlight.1);
        assert_eq!(ps.points.len(), 9_990);
        assert_eq!(ps.points[0], (10, x[10], x[0]));

        let steep: Vec<f64> = (0..1000).map(|i| if i < 700 { i as f64 } else { 700.0 + 5.0 * (i - 700) as f64 }).collect();
        let ps = phase_space_export(&steep, 1, 100).unwrap();
        assert!(ps.highlight.0 <= 700 && 700 < ps.highlight.1);

        let flat = vec![2.0; 400];
        let ps = phase_space_export(&flat, 5, 100).unwrap();
        assert!(ps.points.iter().all(|&(_, a, b)| a == 2.0 && b == 2.0));
        assert_eq!(ps.highlight, (5, 105));
    }

    #[test]
    fn delta_against_itself_is_zero() {
        let x: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64).collect();
        let opts = DimensionOptions {
            max_points: 500,
            ..DimensionOptions::default()
        };
        let c = dimension_vs_embedding(&x, 1..=3, &opts).unwrap();
        let d = delta_dimension(&c, &c).unwrap();
        assert_eq!((d.all, d.high, d.common), (0.0, 0.0, 3));
    }
}
