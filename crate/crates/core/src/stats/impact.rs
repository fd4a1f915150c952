use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::StatsError;
use crate::book::{BookEvent, EventKind, Side};

/// One aggressive order: its total filled volume and the mid prices just
/// before and just after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactObservation {
    pub side: Side,
    pub volume: u64,
    pub mid_before: Option<f64>,
    pub mid_after: Option<f64>,
}

/// Groups the fills of each book operation and pairs them with the
/// surrounding mids. Operations without fills are skipped. The mid before is
/// read from the first fill, so a log rebuilt from after-snapshots alone
/// gives the same observations.
pub fn impact_observations(events: &[BookEvent]) -> Vec<ImpactObservation> {
    let mut out = Vec::new();
    let mut filled = 0u64;
    let mut mid_before = None;
    for e in events {
        match e.kind {
            EventKind::Trade => {
                if filled == 0 {
                    mid_before = e.before.mid();
                }
                filled += e.volume;
            }
            EventKind::MarketExec | EventKind::LimitPlaced => {
                if filled > 0 {
                    out.push(ImpactObservation {
                        side: e.side,
                        volume: filled,
                        mid_before,
                        mid_after: e.after.mid(),
                    });
                }
                filled = 0;
            }
            EventKind::Cancel => filled = 0,
        }
    }
    out
}

/// Log-spaced bins of normalised volume `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactBins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for ImpactBins {
    fn default() -> Self {
        ImpactBins {
            lo: 1e-6,
            hi: 1e-1,
            count: 20,
        }
    }
}

impl ImpactBins {
    pub fn edges(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..=self.count)
            .map(|i| (a + (b - a) * i as f64 / self.count as f64).exp())
            .collect()
    }

    fn bin(&self, omega: f64) -> Option<usize> {
        if !(omega >= self.lo && omega < self.hi) {
            return None;
        }
        let f = (omega.ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln());
        Some(((f * self.count as f64) as usize).min(self.count - 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceImpactCurve {
    pub side: Side,
    /// `count + 1` increasing bin edges.
    pub edges: Vec<f64>,
    pub sum: Vec<f64>,
    pub counts: Vec<usize>,
}

impl PriceImpactCurve {
    fn empty(side: Side, bins: &ImpactBins) -> Self {
        PriceImpactCurve {
            side,
            edges: bins.edges(),
            sum: vec![0.0; bins.count],
            counts: vec![0; bins.count],
        }
    }

    /// Mean impact per bin, `None` for empty bins.
    pub fn mean_impact(&self) -> Vec<Option<f64>> {
        self.sum
            .iter()
            .zip(&self.counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect()
    }

    /// Geometric bin centres.
    pub fn centres(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect()
    }

    /// Pools another curve over the same bins into this one.
    pub fn merge(&mut self, other: &PriceImpactCurve) -> Result<(), StatsError> {
        if self.edges != other.edges || self.side != other.side {
            return Err(StatsError::InvalidArgument("impact curves use different bins or sides"));
        }
        for i in 0..self.sum.len() {
            self.sum[i] += other.sum[i];
            self.counts[i] += other.counts[i];
        }
        Ok(())
    }
}

/// Buyer- and seller-initiated impact curves: `omega = volume / adv`,
/// `dp = |ln(mid_after / mid_before)|`, averaged per `omega` bin.
/// Observations without both mids, or outside the bin range, are skipped.
pub fn price_impact_curves(
    obs: &[ImpactObservation],
    adv: f64,
    bins: &ImpactBins,
) -> Result<(PriceImpactCurve, PriceImpactCurve), StatsError> {
    if !(adv > 0.0) {
        return Err(StatsError::InvalidArgument("ADV must be positive"));
    }
    if !(bins.count > 0 && bins.lo > 0.0 && bins.hi > bins.lo) {
        return Err(StatsError::InvalidArgument("bins need 0 < lo < hi and count > 0"));
    }
    let mut buy = PriceImpactCurve::empty(Side::Buy, bins);
    let mut sell = PriceImpactCurve::empty(Side::Sell, bins);
    for o in obs {
        let (Some(before), Some(after)) = (o.mid_before, o.mid_after) else {
            continue;
        };
        if !(before > 0.0 && after > 0.0) {
            continue;
        }
        let Some(b) = bins.bin(o.volume as f64 / adv) else {
            continue;
        };
        let curve = match o.side {
            Side::Buy => &mut buy,
            Side::Sell => &mut sell,
        };
        curve.sum[b] += (after / before).ln().abs();
        curve.counts[b] += 1;
    }
    Ok((buy, sell))
}
