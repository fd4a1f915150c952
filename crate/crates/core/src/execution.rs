//! Parent-order execution agents.
//!
//! Three agent types split a parent order of `X0` units over a horizon of
//! `T0` events:
//!
//! - Type S follows a plain TWAP schedule of market orders,
//! - Type I learns a multiplier on each TWAP child market order,
//! - Type II additionally learns passive limit orders (placement depth and
//!   re-decision rate).
//!
//! Learners observe a bucketed state (remaining inventory, elapsed time,
//! same-side top-of-book volume, spread), act epsilon-greedily on a tabular
//! action-value function and are rewarded with VWAP slippage against the rest
//! of the market minus a time-escalating penalty for unexecuted inventory.

use alloc::vec;
use alloc::vec::Vec;

// Float supplies f64 math without std; with std linked the inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use thiserror::Error;

use crate::book::{AgentId, Price, Quotes, Side, Trade};
use crate::env::Intent;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("cannot split {total} units into {children} child orders")]
    TooFewUnits { total: u64, children: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam {
        name: &'static str,
        reason: &'static str,
    },
    #[error("limit placement deferred: the book has no mid price")]
    NoMid,
    #[error("reward skipped: no market trades outside the agent's own")]
    NoMarketTrades,
    #[error("action index {index} out of range for {kind:?}")]
    BadAction { index: usize, kind: AgentType },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentType {
    /// TWAP benchmark, market orders only, no learning.
    TwapS,
    /// Learns market-order multipliers.
    TypeI,
    /// Learns market-order multipliers and limit-order placement.
    TypeII,
}

impl AgentType {
    pub fn label(self) -> &'static str {
        match self {
            AgentType::TwapS => "S",
            AgentType::TypeI => "I",
            AgentType::TypeII => "II",
        }
    }

    pub fn is_learner(self) -> bool {
        !matches!(self, AgentType::TwapS)
    }

    pub fn n_actions(self) -> usize {
        match self {
            AgentType::TwapS => 0,
            AgentType::TypeI => MARKET_MULTIPLIERS.len(),
            AgentType::TypeII => MARKET_MULTIPLIERS.len() + LIMIT_DEPTHS.len() * LIMIT_RATES.len(),
        }
    }

    pub fn action(self, index: usize) -> Result<Action, ExecError> {
        let n_mo = MARKET_MULTIPLIERS.len();
        match self {
            AgentType::TypeI | AgentType::TypeII if index < n_mo => Ok(Action::Market {
                multiplier: MARKET_MULTIPLIERS[index],
            }),
            AgentType::TypeII if index < self.n_actions() => {
                let j = index - n_mo;
                Ok(Action::Limit {
                    depth: LIMIT_DEPTHS[j / LIMIT_RATES.len()],
                    rate: LIMIT_RATES[j % LIMIT_RATES.len()],
                })
            }
            _ => Err(ExecError::BadAction { index, kind: self }),
        }
    }
}

/// Multiples of the TWAP child volume available as market-order actions.
pub const MARKET_MULTIPLIERS: [f64; 9] = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
/// Limit placement depths (shallow, deep), in units of the depth scale.
pub const LIMIT_DEPTHS: [f64; 2] = [0.01, 1.0];
/// Decision rates per session (fast, moderate, slow).
pub const LIMIT_RATES: [f64; 3] = [100.0, 10.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Market { multiplier: f64 },
    Limit { depth: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentOrder {
    pub agent: AgentId,
    pub side: Side,
    pub total: u64,
    pub horizon: u64,
    pub executed: u64,
}

impl ParentOrder {
    pub fn new(agent: AgentId, side: Side, total: u64, horizon: u64) -> Self {
        ParentOrder {
            agent,
            side,
            total,
            horizon,
            executed: 0,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.total - self.executed
    }

    pub fn is_complete(&self) -> bool {
        self.executed >= self.total
    }

    /// Books a fill, never beyond the parent total.
    pub fn fill(&mut self, volume: u64) {
        self.executed = (self.executed + volume).min(self.total);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwapSchedule {
    pub decision_points: Vec<u64>,
    pub child_volumes: Vec<u64>,
}

/// `children` equally spaced decision points over `[0, horizon)` with equal
/// child volumes; the integer remainder goes to the last child.
pub fn build_twap_schedule(
    total: u64,
    children: usize,
    horizon: u64,
) -> Result<TwapSchedule, ExecError> {
    if children == 0 || total < children as u64 {
        return Err(ExecError::TooFewUnits { total, children });
    }
    let n = children as u64;
    let base = total / n;
    let mut child_volumes = vec![base; children];
    child_volumes[children - 1] += total - base * n;
    let decision_points = (0..n).map(|i| i * horizon / n).collect();
    Ok(TwapSchedule {
        decision_points,
        child_volumes,
    })
}

/// Number of buckets per state dimension.
pub const BUCKETS: usize = 5;
pub const N_STATES: usize = BUCKETS * BUCKETS * BUCKETS * BUCKETS;

/// Upper bucket edges of top-of-book volume.
pub const VOLUME_EDGES: [f64; 4] = [31.0, 266.0, 1453.0, 5209.0];
/// Upper bucket edges of the spread in ticks.
pub const SPREAD_EDGES: [f64; 4] = [1.0, 2.0, 3.0, 7.0];

/// Bucket boundaries. Inventory and time use multiples of `X0/5` and `T0/5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    pub inventory_unit: f64,
    pub time_unit: f64,
    pub volume_edges: [f64; 4],
    pub spread_edges: [f64; 4],
}

impl StateSpec {
    pub fn new(total_volume: u64, horizon: u64) -> Self {
        StateSpec {
            inventory_unit: total_volume as f64 / BUCKETS as f64,
            time_unit: horizon as f64 / BUCKETS as f64,
            volume_edges: VOLUME_EDGES,
            spread_edges: SPREAD_EDGES,
        }
    }
}

/// Raw observation at a decision point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub remaining: f64,
    pub elapsed: f64,
    /// Top-of-book volume on the agent's own side (0 when the side is empty).
    pub volume: f64,
    /// `None` on a one-sided book, which maps to the widest bucket.
    pub spread: Option<f64>,
}

/// Bucket labels, each in `1..=5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiscreteState {
    pub inventory: u8,
    pub time: u8,
    pub volume: u8,
    pub spread: u8,
}

impl DiscreteState {
    pub fn index(self) -> usize {
        let b = BUCKETS;
        (((self.inventory as usize - 1) * b + (self.time as usize - 1)) * b
            + (self.volume as usize - 1))
            * b
            + (self.spread as usize - 1)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= N_STATES {
            return None;
        }
        let b = BUCKETS;
        Some(DiscreteState {
            spread: (index % b + 1) as u8,
            volume: (index / b % b + 1) as u8,
            time: (index / (b * b) % b + 1) as u8,
            inventory: (index / (b * b * b) + 1) as u8,
        })
    }
}

/// Intervals are open on the left and closed on the right; values at or
/// below the first edge land in bucket 1, values above the last in bucket 5.
fn bucket_by_edges(x: f64, edges: &[f64; 4]) -> u8 {
    1 + edges.iter().filter(|&&e| x > e).count() as u8
}

fn bucket_by_unit(x: f64, unit: f64) -> u8 {
    let edges = [unit, 2.0 * unit, 3.0 * unit, 4.0 * unit];
    bucket_by_edges(x, &edges)
}

pub fn discretize_state(obs: &Observation, spec: &StateSpec) -> DiscreteState {
    DiscreteState {
        inventory: bucket_by_unit(obs.remaining, spec.inventory_unit),
        time: bucket_by_unit(obs.elapsed, spec.time_unit),
        volume: bucket_by_edges(obs.volume, &spec.volume_edges),
        spread: match obs.spread {
            Some(s) => bucket_by_edges(s, &spec.spread_edges),
            None => BUCKETS as u8,
        },
    }
}

/// Dense action-value table over the 625 states.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_actions: usize) -> Self {
        QTable {
            n_actions,
            values: vec![0.0; N_STATES * n_actions],
        }
    }

    pub fn for_agent(kind: AgentType) -> Self {
        Self::new(kind.n_actions())
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: DiscreteState, action: usize) -> f64 {
        self.values[state.index() * self.n_actions + action]
    }

    pub fn set(&mut self, state: DiscreteState, action: usize, value: f64) {
        self.values[state.index() * self.n_actions + action] = value;
    }

    pub fn row(&self, state: DiscreteState) -> &[f64] {
        let i = state.index() * self.n_actions;
        &self.values[i..i + self.n_actions]
    }

    pub fn row_mut(&mut self, state: DiscreteState) -> &mut [f64] {
        let i = state.index() * self.n_actions;
        &mut self.values[i..i + self.n_actions]
    }

    /// Greedy action, lowest index on ties.
    pub fn argmax(&self, state: DiscreteState) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max_value(&self, state: DiscreteState) -> f64 {
        self.row(state)[self.argmax(state)]
    }

    /// `(state index, action, value)` for every cell in state-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_actions;
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i / n, i % n, v))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Epsilon-greedy choice: a uniform random action with probability
/// `epsilon`, otherwise the greedy action.
pub fn select_action(q: &QTable, state: DiscreteState, epsilon: f64, rng: &mut SimRng) -> usize {
    if epsilon > 0.0 && rng.random_bool(epsilon.clamp(0.0, 1.0)) {
        rng.random_range(0..q.n_actions())
    } else {
        q.argmax(state)
    }
}

/// Market-order volume for a multiplier on the current TWAP child, capped at
/// the remaining inventory. `None` when nothing would be sent.
pub fn apply_action_type_i(multiplier: f64, child_volume: u64, parent: &ParentOrder) -> Option<Intent> {
    if parent.is_complete() {
        return None;
    }
    let v = (multiplier * child_volume as f64).round() as u64;
    let v = v.min(parent.remaining());
    (v > 0).then_some(Intent::Market {
        side: parent.side,
        volume: v,
    })
}

/// Order to send and the number of events until the agent's next decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeIIPlan {
    pub intent: Option<Intent>,
    pub next_decision_in: u64,
}

/// Events between decisions for a limit action at `rate` decisions per
/// session.
pub fn limit_decision_interval(rate: f64, session_events: u64) -> u64 {
    ((session_events as f64 / rate).round() as u64).max(1)
}

/// Limit price `depth * depth_scale` ticks from the mid on the passive side,
/// never crossing the opposite best.
pub fn limit_price(side: Side, quotes: &Quotes, depth: f64, depth_scale: f64) -> Result<Price, ExecError> {
    let mid = quotes.mid().ok_or(ExecError::NoMid)?;
    let offset = depth * depth_scale;
    let ticks = match side {
        Side::Buy => {
            let p = (mid - offset).floor() as i64;
            quotes.best_ask().map_or(p, |a| p.min(a.ticks() - 1))
        }
        Side::Sell => {
            let p = (mid + offset).ceil() as i64;
            quotes.best_bid().map_or(p, |b| p.max(b.ticks() + 1))
        }
    };
    Ok(Price::new(ticks.max(1)).expect("clamped positive"))
}

/// Type II action: market actions behave as Type I and wait for the next
/// TWAP slot; limit actions rest `child_volume` at the chosen depth and wait
/// `session / rate` events.
pub fn apply_action_type_ii(
    action: Action,
    quotes: &Quotes,
    parent: &ParentOrder,
    child_volume: u64,
    depth_scale: f64,
    twap_interval: u64,
) -> Result<TypeIIPlan, ExecError> {
    match action {
        Action::Market { multiplier } => Ok(TypeIIPlan {
            intent: apply_action_type_i(multiplier, child_volume, parent),
            next_decision_in: twap_interval.max(1),
        }),
        Action::Limit { depth, rate } => {
            let price = limit_price(parent.side, quotes, depth, depth_scale)?;
            let volume = child_volume.min(parent.remaining());
            Ok(TypeIIPlan {
                intent: (volume > 0).then_some(Intent::Limit {
                    side: parent.side,
                    price,
                    volume,
                }),
                next_decision_in: limit_decision_interval(rate, parent.horizon),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    /// Weight of the penalty term.
    pub penalty_weight: f64,
    /// Exponential sensitivity of the penalty to elapsed session fraction.
    pub time_sensitivity: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            penalty_weight: 0.01,
            time_sensitivity: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reward {
    pub slippage: f64,
    pub penalty: f64,
}

impl Reward {
    pub fn total(&self) -> f64 {
        self.slippage - self.penalty
    }
}

/// `±ln(market VWAP / VWAP without the agent)`, positive orientation for
/// sellers.
pub fn slippage(side: Side, market_vwap: f64, others_vwap: f64) -> f64 {
    let s = (market_vwap / others_vwap).ln();
    match side {
        Side::Sell => s,
        Side::Buy => -s,
    }
}

/// `(remaining / matched) * weight * exp(sensitivity * t)`. A zero match is
/// treated as one unit.
pub fn penalty(remaining: u64, matched: u64, t: f64, params: &RewardParams) -> f64 {
    let matched = matched.max(1) as f64;
    remaining as f64 / matched * params.penalty_weight * (params.time_sensitivity * t).exp()
}

/// Reward for an agent's latest order given every trade so far. `t` is the
/// elapsed session fraction.
pub fn compute_reward(
    trades: &[Trade],
    agent: AgentId,
    side: Side,
    remaining: u64,
    matched: u64,
    t: f64,
    params: &RewardParams,
) -> Result<Reward, ExecError> {
    let market = crate::book::vwap(trades, None).map_err(|_| ExecError::NoMarketTrades)?;
    let others = crate::book::vwap(trades, Some(agent)).map_err(|_| ExecError::NoMarketTrades)?;
    Ok(Reward {
        slippage: slippage(side, market, others),
        penalty: penalty(remaining, matched, t, params),
    })
}

/// Running VWAP sums for the whole market and for the market minus each
/// tracked agent. Sums accumulate in trade order, so the results are
/// bit-identical to [`crate::book::vwap`] over the same trade list.
#[derive(Debug, Clone, PartialEq)]
pub struct VwapTracker {
    agents: Vec<AgentId>,
    market: (f64, u64),
    excluding: Vec<(f64, u64)>,
}

impl VwapTracker {
    pub fn new(agents: &[AgentId]) -> Self {
        VwapTracker {
            agents: agents.to_vec(),
            market: (0.0, 0),
            excluding: vec![(0.0, 0); agents.len()],
        }
    }

    pub fn record(&mut self, t: &Trade) {
        let notional = t.price.as_f64() * t.volume as f64;
        self.market.0 += notional;
        self.market.1 += t.volume;
        for (a, acc) in self.agents.iter().zip(self.excluding.iter_mut()) {
            if !t.involves(*a) {
                acc.0 += notional;
                acc.1 += t.volume;
            }
        }
    }

    pub fn market_vwap(&self) -> Option<f64> {
        (self.market.1 > 0).then(|| self.market.0 / self.market.1 as f64)
    }

    pub fn vwap_excluding(&self, agent: AgentId) -> Option<f64> {
        let i = self.agents.iter().position(|&a| a == agent)?;
        let (n, v) = self.excluding[i];
        (v > 0).then(|| n / v as f64)
    }

    pub fn reward(
        &self,
        agent: AgentId,
        side: Side,
        remaining: u64,
        matched: u64,
        t: f64,
        params: &RewardParams,
    ) -> Result<Reward, ExecError> {
        let market = self.market_vwap().ok_or(ExecError::NoMarketTrades)?;
        let others = self.vwap_excluding(agent).ok_or(ExecError::NoMarketTrades)?;
        Ok(Reward {
            slippage: slippage(side, market, others),
            penalty: penalty(remaining, matched, t, params),
        })
    }
}

/// Per-episode exploration rate `max(floor, initial * decay^episode)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl EpsilonSchedule {
    /// Multiplicative decay that reaches `floor` on the last of `episodes`.
    pub fn spanning(episodes: usize, initial: f64, floor: f64) -> Self {
        let decay = if episodes > 1 && initial > 0.0 && floor > 0.0 {
            (floor / initial).powf(1.0 / (episodes - 1) as f64)
        } else {
            1.0
        };
        EpsilonSchedule {
            initial,
            decay,
            floor,
        }
    }

    pub fn at(&self, episode: usize) -> f64 {
        (self.initial * self.decay.powi(episode as i32)).max(self.floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLearningParams {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for QLearningParams {
    fn default() -> Self {
        QLearningParams {
            learning_rate: 0.1,
            discount: 1.0,
            epsilon: EpsilonSchedule::spanning(100, 1.0, 0.05),
        }
    }
}

impl QLearningParams {
    pub fn validate(&self) -> Result<(), ExecError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(ExecError::InvalidParam {
                name: "learning_rate",
                reason: "must lie in (0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(ExecError::InvalidParam {
                name: "discount",
                reason: "must lie in [0, 1]",
            });
        }
        let e = &self.epsilon;
        if !((0.0..=1.0).contains(&e.initial) && (0.0..=1.0).contains(&e.floor) && e.decay > 0.0) {
            return Err(ExecError::InvalidParam {
                name: "epsilon",
                reason: "initial and floor must lie in [0, 1], decay must be positive",
            });
        }
        Ok(())
    }
}

/// One-step Q-learning backup of a single cell. `next` is `None` for a
/// terminal transition.
pub fn q_update(
    q: &mut QTable,
    state: DiscreteState,
    action: usize,
    reward: f64,
    next: Option<DiscreteState>,
    learning_rate: f64,
    discount: f64,
) {
    let bootstrap = next.map_or(0.0, |s| discount * q.max_value(s));
    let old = q.get(state, action);
    q.set(state, action, old + learning_rate * (reward + bootstrap - old));
}

pub fn episode_return(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}
