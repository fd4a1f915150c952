//! Independent reference implementations and synthetic data for the
//! integration and acceptance tests. Nothing here calls into the code under
//! test except for its public types.
#![allow(dead_code)]

use marl_lob_core::book::{AgentId, LimitOrderBook, Order, OrderId, Price, Side, Trade};
use marl_lob_core::SimRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

/// Fill as seen by the oracle: (price, volume, aggressor side, aggressor,
/// passive agent, passive order).
pub type Fill = (i64, u64, Side, AgentId, AgentId, OrderId);

pub fn fill_of(t: &Trade) -> Fill {
    (
        t.price.ticks(),
        t.volume,
        t.aggressor_side,
        t.aggressor_agent,
        t.passive_agent,
        t.passive_order,
    )
}

#[derive(Debug, Clone, Copy)]
struct Resting {
    id: OrderId,
    agent: AgentId,
    side: Side,
    price: i64,
    volume: u64,
    arrival: u64,
}

/// Matcher that keeps every resting order in one flat list and rescans it
/// for the best counterparty before each fill.
#[derive(Debug, Default)]
pub struct BruteBook {
    orders: Vec<Resting>,
    clock: u64,
}

impl BruteBook {
    fn best_counterparty(&self, side: Side, limit: Option<i64>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in self.orders.iter().enumerate() {
            if o.side == side {
                continue;
            }
            let marketable = match (side, limit) {
                (_, None) => true,
                (Side::Buy, Some(l)) => o.price <= l,
                (Side::Sell, Some(l)) => o.price >= l,
            };
            if !marketable {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let cur = &self.orders[b];
                    let price_better = match side {
                        Side::Buy => o.price < cur.price,
                        Side::Sell => o.price > cur.price,
                    };
                    price_better || (o.price == cur.price && o.arrival < cur.arrival)
                }
            };
            if better {
                best = Some(i);
            }
        }
        best
    }

    fn sweep(&mut self, agent: AgentId, side: Side, limit: Option<i64>, mut volume: u64) -> (Vec<Fill>, u64) {
        let mut fills = Vec::new();
        while volume > 0 {
            let Some(i) = self.best_counterparty(side, limit) else {
                break;
            };
            let o = &mut self.orders[i];
            let q = volume.min(o.volume);
            fills.push((o.price, q, side, agent, o.agent, o.id));
            o.volume -= q;
            volume -= q;
            if o.volume == 0 {
                self.orders.remove(i);
            }
        }
        (fills, volume)
    }

    pub fn limit(&mut self, id: OrderId, agent: AgentId, side: Side, price: i64, volume: u64) -> Vec<Fill> {
        self.clock += 1;
        let (fills, left) = self.sweep(agent, side, Some(price), volume);
        if left > 0 {
            self.orders.push(Resting {
                id,
                agent,
                side,
                price,
                volume: left,
                arrival: self.clock,
            });
        }
        fills
    }

    pub fn market(&mut self, agent: AgentId, side: Side, volume: u64) -> Vec<Fill> {
        self.clock += 1;
        self.sweep(agent, side, None, volume).0
    }

    pub fn cancel(&mut self, id: OrderId) -> bool {
        match self.orders.iter().position(|o| o.id == id) {
            Some(i) => {
                self.orders.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn resting(&self, side: Side) -> u64 {
        self.orders.iter().filter(|o| o.side == side).map(|o| o.volume).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Op {
    Limit { agent: AgentId, side: Side, price: i64, volume: u64 },
    Market { agent: AgentId, side: Side, volume: u64 },
    /// Cancels the `k`-th id issued so far (modulo), resting or not.
    Cancel { k: usize },
}

pub fn random_ops(rng: &mut SimRng, len: usize) -> Vec<Op> {
    (0..len)
        .map(|_| {
            let side = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
            let agent = rng.random_range(0..6);
            match rng.random_range(0..10) {
                0..=5 => Op::Limit {
                    agent,
                    side,
                    price: rng.random_range(95..=105),
                    volume: rng.random_range(1..=20),
                },
                6..=7 => Op::Market {
                    agent,
                    side,
                    volume: rng.random_range(1..=40),
                },
                _ => Op::Cancel {
                    k: rng.random_range(0..1000),
                },
            }
        })
        .collect()
}

/// Outcome of driving the engine and the oracle with one op sequence.
#[derive(Debug)]
pub struct Comparison {
    pub engine_fills: Vec<Fill>,
    pub oracle_fills: Vec<Fill>,
    pub ever_crossed: bool,
    pub conserved: bool,
    pub resting_agree: bool,
    pub book: LimitOrderBook,
}

pub fn run_both(ops: &[Op]) -> Comparison {
    let mut book = LimitOrderBook::with_event_log();
    let mut oracle = BruteBook::default();
    let mut issued: Vec<OrderId> = Vec::new();
    let mut engine_fills = Vec::new();
    let mut oracle_fills = Vec::new();
    let mut ever_crossed = false;
    let mut conserved = true;
    let mut resting_agree = true;
    let mut next_id: OrderId = 1;
    for op in ops {
        match *op {
            Op::Limit { agent, side, price, volume } => {
                let id = next_id;
                next_id += 1;
                issued.push(id);
                let out = book
                    .submit_limit(Order::limit(id, agent, side, Price::new(price).unwrap(), volume))
                    .expect("valid limit order");
                engine_fills.extend(out.trades.iter().map(fill_of));
                oracle_fills.extend(oracle.limit(id, agent, side, price, volume));
            }
            Op::Market { agent, side, volume } => {
                let trades = book.submit_market(agent, side, volume).expect("positive volume");
                engine_fills.extend(trades.iter().map(fill_of));
                oracle_fills.extend(oracle.market(agent, side, volume));
            }
            Op::Cancel { k } => {
                if issued.is_empty() {
                    continue;
                }
                let id = issued[k % issued.len()];
                let engine = book.cancel(id).is_some();
                let brute = oracle.cancel(id);
                resting_agree &= engine == brute;
            }
        }
        ever_crossed |= book.is_crossed();
        for side in [Side::Buy, Side::Sell] {
            let l = book.ledger(side);
            let resting = book.resting_volume(side);
            conserved &= l.accepted == l.matched + l.cancelled + resting;
            resting_agree &= resting == oracle.resting(side);
        }
    }
    Comparison {
        engine_fills,
        oracle_fills,
        ever_crossed,
        conserved,
        resting_agree,
        book,
    }
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_walk(n: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut level = 0.0;
    gaussian(n, rng)
        .into_iter()
        .map(|e| {
            level += e;
            level
        })
        .collect()
}

/// Fractionally integrated noise `(1 - L)^{-d} e_t` from the MA expansion
/// truncated after `burn + n` terms.
pub fn arfima_0d0(d: f64, n: usize, burn: usize, rng: &mut SimRng) -> Vec<f64> {
    let total = n + burn;
    let mut psi = vec![1.0f64; total];
    for k in 1..total {
        psi[k] = psi[k - 1] * (k as f64 - 1.0 + d) / k as f64;
    }
    let e = gaussian(total, rng);
    (burn..total)
        .map(|t| (0..=t).map(|k| psi[k] * e[t - k]).sum())
        .collect()
}

/// Pareto(alpha) draws with unit scale via inversion.
pub fn pareto(alpha: f64, n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (1.0 - u).powf(-1.0 / alpha)
        })
        .collect()
}

/// GARCH(1,1) returns with Gaussian innovations started at the stationary
/// variance.
pub fn garch11(omega: f64, alpha: f64, beta: f64, n: usize, burn: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut h = omega / (1.0 - alpha - beta);
    let mut out = Vec::with_capacity(n);
    for t in 0..n + burn {
        let z: f64 = StandardNormal.sample(rng);
        let r = h.sqrt() * z;
        if t >= burn {
            out.push(r);
        }
        h = omega + alpha * r * r + beta * h;
    }
    out
}

/// All-pairs correlation counts: pairs with time gap above `theiler` and
/// max-norm distance strictly below each radius.
pub fn brute_counts(points: &[Vec<f64>], times: &[usize], radii: &[f64], theiler: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; radii.len()];
    let mut total = 0u64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if times[i].abs_diff(times[j]) <= theiler {
                continue;
            }
            total += 1;
            let d = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            for (c, r) in counts.iter_mut().zip(radii) {
                if d < *r {
                    *c += 1;
                }
            }
        }
    }
    (counts, total)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
