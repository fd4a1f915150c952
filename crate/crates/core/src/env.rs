//! The minimally intelligent market ecology and its event-time scheduler.
//!
//! Three classes of background agents share one book:
//!
//! - fundamentalists submit market orders toward a private valuation,
//! - chartists follow an exponentially weighted average of mid-price
//!   log-returns,
//! - liquidity providers quote limit orders that lean against top-of-book
//!   imbalance and cancel resting orders with a per-order hazard.
//!
//! Time is counted in events. Each event one agent acts: either an execution
//! agent whose decision point is due (see [`crate::sim`]) or a background
//! agent drawn by the [`Scheduler`].

use alloc::vec::Vec;

// Float supplies f64 math without std; with std linked the inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use thiserror::Error;

use crate::book::{AgentId, BookError, LimitOrderBook, Order, OrderId, Price, Quotes, Side, Trade};
use crate::rng::{derive_seed, SimRng};
use rand::SeedableRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment parameter `{name}`: {reason}")]
    InvalidParam {
        name: &'static str,
        reason: &'static str,
    },
    #[error("book rejected an intent: {0}")]
    Book(#[from] BookError),
    #[error("unknown agent id {0}")]
    UnknownAgent(AgentId),
}

/// Child-order size law: lognormal, rounded to whole units, at least 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeLaw {
    /// Mean of the underlying normal (log units).
    pub log_mean: f64,
    pub log_sigma: f64,
}

impl VolumeLaw {
    pub fn sample(&self, rng: &mut SimRng) -> u64 {
        let v = match LogNormal::new(self.log_mean, self.log_sigma) {
            Ok(d) => d.sample(rng),
            Err(_) => self.log_mean.exp(),
        };
        let v = v.round();
        if v < 1.0 {
            1
        } else if v > 1e15 {
            1_000_000_000_000_000
        } else {
            v as u64
        }
    }
}

/// Relative event intensities of the background classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalRates {
    pub fundamentalist: f64,
    pub chartist: f64,
    pub liquidity_provider: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentParams {
    /// Reference price (ticks) used before the book has a mid.
    pub initial_price: i64,
    pub n_fundamentalists: usize,
    pub n_chartists: usize,
    pub n_liquidity_providers: usize,
    /// Log-volatility of fundamentalist private values around the initial
    /// price.
    pub fundamental_value_sigma: f64,
    /// Log-drift applied to every fundamentalist valuation over one session
    /// (valuations scale by `exp(drift * elapsed_fraction)`).
    pub fundamental_drift: f64,
    pub chartist_ewma_lambda: f64,
    /// Inclusive tick offsets from the same-side best at which liquidity
    /// providers quote. Negative offsets improve on the best quote.
    pub lp_depth_range: (i64, i64),
    pub order_volume: VolumeLaw,
    pub arrival_rates: ArrivalRates,
    /// Per-live-order cancellation hazard of a liquidity provider's event.
    pub cancel_rate: f64,
    pub session_events: u64,
    /// Mark-to-market loss at which a liquidity taker is ruined and replaced.
    pub wealth_budget: f64,
    /// Events between running-profit samples.
    pub profit_sample_interval: u64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        EnvironmentParams {
            initial_price: 10_000,
            n_fundamentalists: 8,
            n_chartists: 8,
            n_liquidity_providers: 6,
            fundamental_value_sigma: 0.004,
            fundamental_drift: 0.01,
            chartist_ewma_lambda: 0.9,
            lp_depth_range: (-1, 4),
            order_volume: VolumeLaw {
                log_mean: 4.6,
                log_sigma: 0.8,
            },
            arrival_rates: ArrivalRates {
                fundamentalist: 1.0,
                chartist: 1.0,
                liquidity_provider: 6.0,
            },
            cancel_rate: 0.02,
            session_events: 50_000,
            wealth_budget: 5.0e6,
            profit_sample_interval: 100,
        }
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |name, reason| Err(EnvError::InvalidParam { name, reason });
        if self.initial_price <= 0 {
            return bad("initial_price", "must be positive");
        }
        if !(self.chartist_ewma_lambda > 0.0 && self.chartist_ewma_lambda < 1.0) {
            return bad("chartist_ewma_lambda", "must lie in (0, 1)");
        }
        let r = &self.arrival_rates;
        if !(r.fundamentalist > 0.0 && r.chartist > 0.0 && r.liquidity_provider > 0.0) {
            return bad("arrival_rates", "rates must be positive");
        }
        if !(self.cancel_rate > 0.0) || !self.cancel_rate.is_finite() {
            return bad("cancel_rate", "must be positive");
        }
        if !(self.fundamental_value_sigma >= 0.0) || !self.fundamental_drift.is_finite() {
            return bad("fundamental_value_sigma", "must be non-negative");
        }
        if self.lp_depth_range.0 > self.lp_depth_range.1 {
            return bad("lp_depth_range", "lower offset exceeds upper offset");
        }
        if !(self.order_volume.log_sigma >= 0.0) || !self.order_volume.log_mean.is_finite() {
            return bad("order_volume", "log_sigma must be non-negative");
        }
        if self.session_events == 0 {
            return bad("session_events", "must be positive");
        }
        if !(self.wealth_budget > 0.0) {
            return bad("wealth_budget", "must be positive");
        }
        if self.profit_sample_interval == 0 {
            return bad("profit_sample_interval", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AgentClass {
    LiquidityProvider,
    Fundamentalist,
    Chartist,
    Execution,
}

/// What an agent wants to do to the book on its event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    Market { side: Side, volume: u64 },
    Limit { side: Side, price: Price, volume: u64 },
    Cancel { order: OrderId },
}

/// Cash and inventory of one agent; value is marked to a reference mid.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Ledger {
    pub cash: f64,
    pub inventory: i64,
}

impl Ledger {
    pub fn settle(&mut self, side: Side, price: Price, volume: u64) {
        let notional = price.as_f64() * volume as f64;
        match side {
            Side::Buy => {
                self.cash -= notional;
                self.inventory += volume as i64;
            }
            Side::Sell => {
                self.cash += notional;
                self.inventory -= volume as i64;
            }
        }
    }

    pub fn value(&self, mid: f64) -> f64 {
        self.cash + self.inventory as f64 * mid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalistAgent {
    pub id: AgentId,
    /// Subjective valuation in ticks at session open.
    pub private_value: f64,
    pub ledger: Ledger,
}

impl FundamentalistAgent {
    pub fn spawn(id: AgentId, initial_price: f64, sigma: f64, rng: &mut SimRng) -> Self {
        let z = match Normal::new(0.0, sigma) {
            Ok(n) => n.sample(rng),
            Err(_) => 0.0,
        };
        FundamentalistAgent {
            id,
            private_value: initial_price * z.exp(),
            ledger: Ledger::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartistAgent {
    pub id: AgentId,
    pub ewma_return: f64,
    /// Mid observed on the chartist's previous event.
    pub last_mid: Option<f64>,
    pub ledger: Ledger,
}

impl ChartistAgent {
    pub fn new(id: AgentId) -> Self {
        ChartistAgent {
            id,
            ewma_return: 0.0,
            last_mid: None,
            ledger: Ledger::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiquidityProviderAgent {
    pub id: AgentId,
    pub live_orders: Vec<OrderId>,
    pub ledger: Ledger,
}

impl LiquidityProviderAgent {
    pub fn new(id: AgentId) -> Self {
        LiquidityProviderAgent {
            id,
            live_orders: Vec::new(),
            ledger: Ledger::default(),
        }
    }
}

/// Buy below the valuation, sell above it, nothing at equality. `valuation`
/// is the agent's private value after any session drift.
pub fn fundamentalist_decide(
    valuation: f64,
    quotes: &Quotes,
    volumes: &VolumeLaw,
    rng: &mut SimRng,
) -> Option<Intent> {
    // Drawn unconditionally so each event consumes the same randomness.
    let volume = volumes.sample(rng);
    let mid = quotes.mid()?;
    let side = if valuation > mid {
        Side::Buy
    } else if valuation < mid {
        Side::Sell
    } else {
        return None;
    };
    Some(Intent::Market { side, volume })
}

/// Folds the latest mid-price log-return into the chartist's EWMA and trades
/// in the direction of its sign.
pub fn chartist_decide(
    agent: &mut ChartistAgent,
    latest_return: f64,
    lambda: f64,
    volumes: &VolumeLaw,
    rng: &mut SimRng,
) -> Option<Intent> {
    let volume = volumes.sample(rng);
    agent.ewma_return = lambda * agent.ewma_return + (1.0 - lambda) * latest_return;
    let side = if agent.ewma_return > 0.0 {
        Side::Buy
    } else if agent.ewma_return < 0.0 {
        Side::Sell
    } else {
        return None;
    };
    Some(Intent::Market { side, volume })
}

/// Probability that a liquidity provider quotes the ask side: the bid's share
/// of top-of-book volume, so the thinner side is quoted more often.
pub fn ask_quote_probability(quotes: &Quotes) -> f64 {
    let bv = quotes.bid_volume() as f64;
    let av = quotes.ask_volume() as f64;
    if bv + av == 0.0 {
        0.5
    } else {
        bv / (bv + av)
    }
}

/// Probability that a liquidity provider's event is a cancellation.
pub fn cancel_probability(live_orders: usize, cancel_rate: f64) -> f64 {
    1.0 - (-cancel_rate * live_orders as f64).exp()
}

/// Cancels a uniformly chosen live order; nothing when there is none.
pub fn choose_cancel(live_orders: &[OrderId], rng: &mut SimRng) -> Option<Intent> {
    pick_cancel(live_orders, rng.random())
}

/// Cancels the live order at quantile `u` in [0, 1).
fn pick_cancel(live_orders: &[OrderId], u: f64) -> Option<Intent> {
    if live_orders.is_empty() {
        return None;
    }
    let i = ((u * live_orders.len() as f64) as usize).min(live_orders.len() - 1);
    Some(Intent::Cancel {
        order: live_orders[i],
    })
}

/// Limit price for a passive quote `depth` ticks behind the same-side best.
/// Without a same-side quote the offset is taken from `reference_mid`. The
/// result never crosses the opposite best.
pub fn quote_price(side: Side, depth: i64, quotes: &Quotes, reference_mid: f64) -> Price {
    let raw = match side {
        Side::Buy => match quotes.best_bid() {
            Some(b) => b.ticks() - depth,
            None => (reference_mid - depth.max(1) as f64).floor() as i64,
        },
        Side::Sell => match quotes.best_ask() {
            Some(a) => a.ticks() + depth,
            None => (reference_mid + depth.max(1) as f64).ceil() as i64,
        },
    };
    let clamped = match side {
        Side::Buy => quotes.best_ask().map_or(raw, |a| raw.min(a.ticks() - 1)),
        Side::Sell => quotes.best_bid().map_or(raw, |b| raw.max(b.ticks() + 1)),
    };
    Price::new(clamped.max(1)).expect("clamped to a positive tick")
}

pub fn liquidity_provider_decide(
    agent: &LiquidityProviderAgent,
    quotes: &Quotes,
    reference_mid: f64,
    params: &EnvironmentParams,
    rng: &mut SimRng,
) -> Option<Intent> {
    // A fixed set of draws per event keeps each agent's stream aligned
    // across runs whose book states differ.
    let u_cancel: f64 = rng.random();
    let u_pick: f64 = rng.random();
    let u_side: f64 = rng.random();
    let (lo, hi) = params.lp_depth_range;
    let depth = rng.random_range(lo..=hi);
    let volume = params.order_volume.sample(rng);
    if u_cancel < cancel_probability(agent.live_orders.len(), params.cancel_rate) {
        return pick_cancel(&agent.live_orders, u_pick);
    }
    let side = if u_side < ask_quote_probability(quotes) {
        Side::Sell
    } else {
        Side::Buy
    };
    Some(Intent::Limit {
        side,
        price: quote_price(side, depth, quotes, reference_mid),
        volume,
    })
}

/// Which background agent acts on an event, and the event's number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledEvent {
    pub class: AgentClass,
    pub index: usize,
    pub seq: u64,
}

/// Event-time clock: draws the acting class in proportion to its arrival
/// rate (classes without members never act), then a member uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduler {
    weights: [f64; 3],
    sizes: [usize; 3],
    next_seq: u64,
    budget: u64,
}

const SCHEDULED_CLASSES: [AgentClass; 3] = [
    AgentClass::Fundamentalist,
    AgentClass::Chartist,
    AgentClass::LiquidityProvider,
];

impl Scheduler {
    /// `sizes` are the member counts of fundamentalists, chartists and
    /// liquidity providers.
    pub fn new(rates: &ArrivalRates, sizes: [usize; 3], budget: u64) -> Self {
        let raw = [rates.fundamentalist, rates.chartist, rates.liquidity_provider];
        let mut weights = [0.0; 3];
        for i in 0..3 {
            weights[i] = if sizes[i] > 0 { raw[i] } else { 0.0 };
        }
        Scheduler {
            weights,
            sizes,
            next_seq: 0,
            budget,
        }
    }

    /// Selection probability of each class in the order fundamentalist,
    /// chartist, liquidity provider.
    pub fn class_probabilities(&self) -> [f64; 3] {
        let total: f64 = self.weights.iter().sum();
        if total == 0.0 {
            return [0.0; 3];
        }
        [
            self.weights[0] / total,
            self.weights[1] / total,
            self.weights[2] / total,
        ]
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn is_exhausted(&self) -> bool {
        self.next_seq >= self.budget
    }

    /// Consumes one event number without drawing an agent (used by execution
    /// agents whose decision point is due). `None` at the end of the episode.
    pub fn claim(&mut self) -> Option<u64> {
        if self.is_exhausted() {
            return None;
        }
        let s = self.next_seq;
        self.next_seq += 1;
        Some(s)
    }

    /// Draws the next background agent. `None` signals end of episode. When
    /// no class has members the event is consumed by nobody and reported as
    /// a liquidity-provider event with index `usize::MAX`.
    pub fn schedule_next_event(&mut self, rng: &mut SimRng) -> Option<ScheduledEvent> {
        let seq = self.claim()?;
        let total: f64 = self.weights.iter().sum();
        if total == 0.0 {
            return Some(ScheduledEvent {
                class: AgentClass::LiquidityProvider,
                index: usize::MAX,
                seq,
            });
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = 2;
        for i in 0..3 {
            if self.weights[i] == 0.0 {
                continue;
            }
            chosen = i;
            if u < self.weights[i] {
                break;
            }
            u -= self.weights[i];
        }
        let index = rng.random_range(0..self.sizes[chosen]);
        Some(ScheduledEvent {
            class: SCHEDULED_CLASSES[chosen],
            index,
            seq,
        })
    }
}

/// Total running profit of each agent class at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitSample {
    pub seq: u64,
    pub liquidity_providers: f64,
    pub fundamentalists: f64,
    pub chartists: f64,
    pub execution: f64,
}

/// Result of applying an intent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Executed {
    pub trades: Vec<Trade>,
    /// Id of the limit order if any of it rests in the book.
    pub resting_order: Option<OrderId>,
    /// Whether a cancel intent removed an order.
    pub cancelled: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Owner {
    class: AgentClass,
    slot: usize,
}

/// Book plus background population for one session.
#[derive(Debug, Clone)]
pub struct Environment {
    params: EnvironmentParams,
    book: LimitOrderBook,
    seed: u64,
    scheduler_rng: SimRng,
    // One stream per background slot, indexed by class then slot.
    agent_rngs: [Vec<SimRng>; 3],
    scheduler: Scheduler,
    lps: Vec<LiquidityProviderAgent>,
    fundamentalists: Vec<FundamentalistAgent>,
    chartists: Vec<ChartistAgent>,
    execution_ledgers: Vec<Ledger>,
    owners: Vec<Owner>,
    next_order_id: OrderId,
    reference_mid: f64,
    retired_profit: [f64; 4],
    profit_series: Vec<ProfitSample>,
    trades: Vec<Trade>,
    failed_market_orders: u64,
    ruined_agents: u64,
}

impl Environment {
    pub fn new(params: EnvironmentParams, seed: u64, record_events: bool) -> Result<Self, EnvError> {
        params.validate()?;
        let scheduler = Scheduler::new(
            &params.arrival_rates,
            [
                params.n_fundamentalists,
                params.n_chartists,
                params.n_liquidity_providers,
            ],
            params.session_events,
        );
        let mut env = Environment {
            book: if record_events {
                LimitOrderBook::with_event_log()
            } else {
                LimitOrderBook::new()
            },
            scheduler,
            lps: Vec::new(),
            fundamentalists: Vec::new(),
            chartists: Vec::new(),
            execution_ledgers: Vec::new(),
            owners: Vec::new(),
            next_order_id: 1,
            reference_mid: params.initial_price as f64,
            retired_profit: [0.0; 4],
            profit_series: Vec::new(),
            trades: Vec::new(),
            failed_market_orders: 0,
            ruined_agents: 0,
            seed,
            scheduler_rng: SimRng::seed_from_u64(derive_seed(seed, 0)),
            agent_rngs: [Vec::new(), Vec::new(), Vec::new()],
            params,
        };
        for slot in 0..env.params.n_liquidity_providers {
            let id = env.register(AgentClass::LiquidityProvider, slot);
            env.lps.push(LiquidityProviderAgent::new(id));
            env.push_stream(AgentClass::LiquidityProvider, slot);
        }
        for slot in 0..env.params.n_fundamentalists {
            let id = env.register(AgentClass::Fundamentalist, slot);
            let (p0, sigma) = (env.params.initial_price as f64, env.params.fundamental_value_sigma);
            let rng = env.push_stream(AgentClass::Fundamentalist, slot);
            let agent = FundamentalistAgent::spawn(id, p0, sigma, rng);
            env.fundamentalists.push(agent);
        }
        for slot in 0..env.params.n_chartists {
            let id = env.register(AgentClass::Chartist, slot);
            env.chartists.push(ChartistAgent::new(id));
            env.push_stream(AgentClass::Chartist, slot);
        }
        Ok(env)
    }

    // Streams are keyed by (class, slot) so a slot draws the same numbers
    // whatever the other agents do.
    fn push_stream(&mut self, class: AgentClass, slot: usize) -> &mut SimRng {
        let c = stream_index(class);
        let seed = derive_seed(derive_seed(self.seed, 1 + c as u64), slot as u64);
        self.agent_rngs[c].push(SimRng::seed_from_u64(seed));
        self.agent_rngs[c].last_mut().expect("just pushed")
    }

    fn register(&mut self, class: AgentClass, slot: usize) -> AgentId {
        let id = self.owners.len() as AgentId;
        self.owners.push(Owner { class, slot });
        id
    }

    /// Adds an execution agent with its own ledger and returns its id.
    pub fn add_execution_agent(&mut self) -> AgentId {
        let id = self.register(AgentClass::Execution, self.execution_ledgers.len());
        self.execution_ledgers.push(Ledger::default());
        id
    }

    pub fn params(&self) -> &EnvironmentParams {
        &self.params
    }

    pub fn book(&self) -> &LimitOrderBook {
        &self.book
    }

    pub fn quotes(&self) -> Quotes {
        self.book.quotes()
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    /// Last defined mid price (the initial price until the book is two-sided).
    pub fn reference_mid(&self) -> f64 {
        self.reference_mid
    }

    /// Elapsed fraction of the session in [0, 1].
    pub fn progress(&self) -> f64 {
        self.scheduler.next_seq() as f64 / self.params.session_events as f64
    }

    pub fn agent_class(&self, id: AgentId) -> Option<AgentClass> {
        self.owners.get(id as usize).map(|o| o.class)
    }

    pub fn liquidity_providers(&self) -> &[LiquidityProviderAgent] {
        &self.lps
    }

    pub fn fundamentalists(&self) -> &[FundamentalistAgent] {
        &self.fundamentalists
    }

    pub fn fundamentalists_mut(&mut self) -> &mut [FundamentalistAgent] {
        &mut self.fundamentalists
    }

    pub fn chartists(&self) -> &[ChartistAgent] {
        &self.chartists
    }

    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    pub fn failed_market_orders(&self) -> u64 {
        self.failed_market_orders
    }

    pub fn ruined_agents(&self) -> u64 {
        self.ruined_agents
    }

    pub fn profit_series(&self) -> &[ProfitSample] {
        &self.profit_series
    }

    pub fn execution_ledger(&self, id: AgentId) -> Option<Ledger> {
        let o = self.owners.get(id as usize)?;
        (o.class == AgentClass::Execution).then(|| self.execution_ledgers[o.slot])
    }

    /// Claims an event number for an execution agent.
    pub fn claim_event(&mut self) -> Option<u64> {
        self.scheduler.claim()
    }

    pub fn next_background_event(&mut self) -> Option<ScheduledEvent> {
        self.scheduler.schedule_next_event(&mut self.scheduler_rng)
    }

    /// Valuation of a fundamentalist at the current point of the session.
    pub fn valuation(&self, agent: &FundamentalistAgent) -> f64 {
        agent.private_value * (self.params.fundamental_drift * self.progress()).exp()
    }

    /// Lets the scheduled background agent decide and applies its intent.
    pub fn act(&mut self, ev: ScheduledEvent) -> Result<(), EnvError> {
        let quotes = self.quotes();
        let intent = match ev.class {
            AgentClass::LiquidityProvider => {
                let Some(agent) = self.lps.get(ev.index) else {
                    return Ok(());
                };
                let rng = &mut self.agent_rngs[stream_index(ev.class)][ev.index];
                liquidity_provider_decide(agent, &quotes, self.reference_mid, &self.params, rng)
                    .map(|i| (agent.id, i))
            }
            AgentClass::Fundamentalist => {
                let agent = &self.fundamentalists[ev.index];
                let valuation = self.valuation(agent);
                let rng = &mut self.agent_rngs[stream_index(ev.class)][ev.index];
                fundamentalist_decide(valuation, &quotes, &self.params.order_volume, rng)
                    .map(|i| (agent.id, i))
            }
            AgentClass::Chartist => {
                let lambda = self.params.chartist_ewma_lambda;
                let agent = &mut self.chartists[ev.index];
                let rng = &mut self.agent_rngs[stream_index(ev.class)][ev.index];
                match quotes.mid() {
                    None => None,
                    Some(mid) => {
                        let prior = agent.last_mid.replace(mid);
                        match prior {
                            None => None,
                            Some(prev) => chartist_decide(
                                agent,
                                (mid / prev).ln(),
                                lambda,
                                &self.params.order_volume,
                                rng,
                            )
                            .map(|i| (agent.id, i)),
                        }
                    }
                }
            }
            AgentClass::Execution => None,
        };
        if let Some((id, intent)) = intent {
            self.execute(id, intent)?;
            if matches!(ev.class, AgentClass::Fundamentalist | AgentClass::Chartist) {
                self.check_ruin(ev.class, ev.index);
            }
        }
        Ok(())
    }

    /// Applies an intent on behalf of `agent`, settles ledgers and keeps the
    /// liquidity providers' live-order lists in sync with the book.
    pub fn execute(&mut self, agent: AgentId, intent: Intent) -> Result<Executed, EnvError> {
        if self.owners.get(agent as usize).is_none() {
            return Err(EnvError::UnknownAgent(agent));
        }
        let mut out = Executed::default();
        match intent {
            Intent::Market { side, volume } => {
                out.trades = self.book.submit_market(agent, side, volume)?;
                if out.trades.is_empty() {
                    self.failed_market_orders += 1;
                }
            }
            Intent::Limit {
                side,
                price,
                volume,
            } => {
                let id = self.next_order_id;
                self.next_order_id += 1;
                let res = self.book.submit_limit(Order::limit(id, agent, side, price, volume))?;
                out.trades = res.trades;
                if res.resting > 0 {
                    out.resting_order = Some(id);
                    if let Some(o) = self.owners.get(agent as usize) {
                        if o.class == AgentClass::LiquidityProvider {
                            self.lps[o.slot].live_orders.push(id);
                        }
                    }
                }
            }
            Intent::Cancel { order } => {
                if let Some(cancelled) = self.book.cancel(order) {
                    out.cancelled = Some(cancelled.volume);
                }
                if let Some(o) = self.owners.get(agent as usize) {
                    if o.class == AgentClass::LiquidityProvider {
                        self.lps[o.slot].live_orders.retain(|&id| id != order);
                    }
                }
            }
        }
        for t in &out.trades {
            self.settle(t.aggressor_agent, t.aggressor_side, t.price, t.volume);
            self.settle(t.passive_agent, t.aggressor_side.opposite(), t.price, t.volume);
            if !self.book.contains(t.passive_order) {
                if let Some(o) = self.owners.get(t.passive_agent as usize) {
                    if o.class == AgentClass::LiquidityProvider {
                        self.lps[o.slot].live_orders.retain(|&id| id != t.passive_order);
                    }
                }
            }
        }
        self.trades.extend_from_slice(&out.trades);
        if let Some(mid) = self.book.quotes().mid() {
            self.reference_mid = mid;
        }
        Ok(out)
    }

    fn ledger_mut(&mut self, id: AgentId) -> Option<&mut Ledger> {
        let o = *self.owners.get(id as usize)?;
        Some(match o.class {
            AgentClass::LiquidityProvider => &mut self.lps[o.slot].ledger,
            AgentClass::Fundamentalist => &mut self.fundamentalists[o.slot].ledger,
            AgentClass::Chartist => &mut self.chartists[o.slot].ledger,
            AgentClass::Execution => &mut self.execution_ledgers[o.slot],
        })
    }

    fn settle(&mut self, id: AgentId, side: Side, price: Price, volume: u64) {
        if let Some(l) = self.ledger_mut(id) {
            l.settle(side, price, volume);
        }
    }

    /// Gambler's ruin: a taker whose marked-to-market loss exceeds the wealth
    /// budget stops acting and a fresh agent of the same class takes its slot.
    fn check_ruin(&mut self, class: AgentClass, slot: usize) {
        let mid = self.reference_mid;
        let value = match class {
            AgentClass::Fundamentalist => self.fundamentalists[slot].ledger.value(mid),
            AgentClass::Chartist => self.chartists[slot].ledger.value(mid),
            _ => return,
        };
        if value >= -self.params.wealth_budget {
            return;
        }
        self.ruined_agents += 1;
        let class_idx = class_index(class);
        self.retired_profit[class_idx] += value;
        let id = self.register(class, slot);
        match class {
            AgentClass::Fundamentalist => {
                self.fundamentalists[slot] = FundamentalistAgent::spawn(
                    id,
                    mid,
                    self.params.fundamental_value_sigma,
                    &mut self.agent_rngs[stream_index(class)][slot],
                );
            }
            AgentClass::Chartist => self.chartists[slot] = ChartistAgent::new(id),
            _ => {}
        }
    }

    /// Running profit per class, including agents that were retired.
    pub fn class_profits(&self) -> [f64; 4] {
        let mid = self.reference_mid;
        let mut out = self.retired_profit;
        out[0] += self.lps.iter().map(|a| a.ledger.value(mid)).sum::<f64>();
        out[1] += self.fundamentalists.iter().map(|a| a.ledger.value(mid)).sum::<f64>();
        out[2] += self.chartists.iter().map(|a| a.ledger.value(mid)).sum::<f64>();
        out[3] += self.execution_ledgers.iter().map(|l| l.value(mid)).sum::<f64>();
        out
    }

    /// Records a running-profit sample when `seq` lands on the sampling grid
    /// or is the last event of the session.
    pub fn sample_profit(&mut self, seq: u64) {
        let last = seq + 1 == self.params.session_events;
        if !seq.is_multiple_of(self.params.profit_sample_interval) && !last {
            return;
        }
        let p = self.class_profits();
        self.profit_series.push(ProfitSample {
            seq,
            liquidity_providers: p[0],
            fundamentalists: p[1],
            chartists: p[2],
            execution: p[3],
        });
    }

    /// Hands over the accumulated records: book events, trades, profit
    /// samples.
    pub fn into_records(mut self) -> (Vec<crate::book::BookEvent>, Vec<Trade>, Vec<ProfitSample>) {
        (self.book.take_events(), self.trades, self.profit_series)
    }
}

fn stream_index(class: AgentClass) -> usize {
    match class {
        AgentClass::LiquidityProvider => 0,
        AgentClass::Fundamentalist => 1,
        AgentClass::Chartist => 2,
        AgentClass::Execution => unreachable!("execution agents draw from their own stream"),
    }
}

fn class_index(class: AgentClass) -> usize {
    match class {
        AgentClass::LiquidityProvider => 0,
        AgentClass::Fundamentalist => 1,
        AgentClass::Chartist => 2,
        AgentClass::Execution => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::book::Quote;

    fn q(bid: Option<(i64, u64)>, ask: Option<(i64, u64)>) -> Quotes {
        Quotes {
            bid: bid.map(|(p, v)| Quote {
                price: Price::new(p).unwrap(),
                volume: v,
            }),
            ask: ask.map(|(p, v)| Quote {
                price: Price::new(p).unwrap(),
                volume: v,
            }),
        }
    }

    fn rng() -> SimRng {
        SimRng::seed_from_u64(11)
    }

    const VOL: VolumeLaw = VolumeLaw {
        log_mean: 4.0,
        log_sigma: 0.5,
    };

    #[test]
    fn fundamentalist_rule() {
        let quotes = q(Some((99, 10)), Some((101, 10)));
        let mut r = rng();
        assert!(matches!(
            fundamentalist_decide(105.0, &quotes, &VOL, &mut r),
            Some(Intent::Market { side: Side::Buy, .. })
        ));
        assert!(matches!(
            fundamentalist_decide(95.0, &quotes, &VOL, &mut r),
            Some(Intent::Market { side: Side::Sell, .. })
        ));
        assert_eq!(fundamentalist_decide(100.0, &quotes, &VOL, &mut r), None);
        // One-sided book: no mid, no action.
        assert_eq!(fundamentalist_decide(105.0, &q(Some((99, 10)), None), &VOL, &mut r), None);
    }

    #[test]
    fn chartist_rule() {
        let mut r = rng();
        let mut a = ChartistAgent::new(0);
        assert!(matches!(
            chartist_decide(&mut a, 0.01, 0.5, &VOL, &mut r),
            Some(Intent::Market { side: Side::Buy, .. })
        ));

        let mut flat = ChartistAgent::new(1);
        for _ in 0..5 {
            assert_eq!(chartist_decide(&mut flat, 0.0, 0.9, &VOL, &mut r), None);
        }
        assert_eq!(flat.ewma_return, 0.0);

        let mut c = ChartistAgent::new(2);
        c.ewma_return = 0.02;
        assert_eq!(chartist_decide(&mut c, -0.02, 0.5, &VOL, &mut r), None);
        assert_eq!(c.ewma_return, 0.0);
    }

    #[test]
    fn imbalance_rule() {
        assert_eq!(ask_quote_probability(&q(Some((99, 90)), Some((101, 10)))), 0.9);
        assert_eq!(ask_quote_probability(&Quotes::default()), 0.5);
        assert_eq!(ask_quote_probability(&q(Some((99, 5)), None)), 1.0);

        let params = EnvironmentParams::default();
        let agent = LiquidityProviderAgent::new(0);
        let quotes = q(Some((99, 90)), Some((101, 10)));
        let mut r = rng();
        let n = 20_000;
        let mut asks = 0;
        for _ in 0..n {
            if let Some(Intent::Limit { side: Side::Sell, .. }) =
                liquidity_provider_decide(&agent, &quotes, 100.0, &params, &mut r)
            {
                asks += 1;
            }
        }
        let f = asks as f64 / n as f64;
        // Binomial(20000, 0.9): sd ~ 0.0021.
        assert!((f - 0.9).abs() < 0.01, "ask fraction {f}");
    }

    #[test]
    fn empty_book_bootstrap_quotes_around_reference() {
        let params = EnvironmentParams::default();
        let agent = LiquidityProviderAgent::new(0);
        let mut r = rng();
        for _ in 0..200 {
            match liquidity_provider_decide(&agent, &Quotes::default(), 100.0, &params, &mut r) {
                Some(Intent::Limit { side: Side::Buy, price, volume }) => {
                    assert!(price.ticks() < 100 && volume >= 1)
                }
                Some(Intent::Limit { side: Side::Sell, price, volume }) => {
                    assert!(price.ticks() > 100 && volume >= 1)
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn cancel_with_no_live_orders_is_noop() {
        let mut r = rng();
        assert_eq!(choose_cancel(&[], &mut r), None);
        assert_eq!(cancel_probability(0, 0.5), 0.0);
        assert!(matches!(choose_cancel(&[4, 5], &mut r), Some(Intent::Cancel { .. })));
    }

    #[test]
    fn quotes_never_cross() {
        let quotes = q(Some((99, 10)), Some((100, 10)));
        for depth in -5..5 {
            assert!(quote_price(Side::Buy, depth, &quotes, 99.5).ticks() <= 99);
            assert!(quote_price(Side::Sell, depth, &quotes, 99.5).ticks() >= 100);
        }
        let wide = q(Some((90, 10)), Some((110, 10)));
        assert_eq!(quote_price(Side::Buy, -2, &wide, 100.0).ticks(), 92);
        assert_eq!(quote_price(Side::Sell, 3, &wide, 100.0).ticks(), 113);
    }

    #[test]
    fn scheduler_probabilities() {
        let equal = ArrivalRates {
            fundamentalist: 1.0,
            chartist: 1.0,
            liquidity_provider: 1.0,
        };
        let s = Scheduler::new(&equal, [2, 2, 2], 10);
        for p in s.class_probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        let lp_heavy = ArrivalRates {
            fundamentalist: 1.0,
            chartist: 1.0,
            liquidity_provider: 8.0,
        };
        let mut s = Scheduler::new(&lp_heavy, [3, 3, 3], 100_000);
        assert!((s.class_probabilities()[2] - 0.8).abs() < 1e-12);
        let mut r = rng();
        let mut lp = 0;
        while let Some(ev) = s.schedule_next_event(&mut r) {
            if ev.class == AgentClass::LiquidityProvider {
                lp += 1;
            }
        }
        let f = lp as f64 / 100_000.0;
        assert!((f - 0.8).abs() < 0.005, "lp fraction {f}");
    }

    #[test]
    fn scheduler_budget() {
        let rates = EnvironmentParams::default().arrival_rates;
        let mut s = Scheduler::new(&rates, [1, 1, 1], 3);
        let mut r = rng();
        assert_eq!(s.schedule_next_event(&mut r).unwrap().seq, 0);
        assert_eq!(s.claim(), Some(1));
        assert_eq!(s.schedule_next_event(&mut r).unwrap().seq, 2);
        assert!(s.schedule_next_event(&mut r).is_none());
        assert!(s.claim().is_none());
    }

    #[test]
    fn empty_classes_never_scheduled() {
        let rates = EnvironmentParams::default().arrival_rates;
        let mut s = Scheduler::new(&rates, [0, 0, 4], 1000);
        let mut r = rng();
        while let Some(ev) = s.schedule_next_event(&mut r) {
            assert_eq!(ev.class, AgentClass::LiquidityProvider);
            assert!(ev.index < 4);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = EnvironmentParams::default();
        p.chartist_ewma_lambda = 1.0;
        assert!(p.validate().is_err());
        let mut p = EnvironmentParams::default();
        p.arrival_rates.chartist = 0.0;
        assert!(p.validate().is_err());
        assert!(EnvironmentParams::default().validate().is_ok());
    }

    #[test]
    fn ledger_marks_to_mid() {
        let mut l = Ledger::default();
        l.settle(Side::Buy, Price::new(100).unwrap(), 10);
        assert_eq!(l.value(100.0), 0.0);
        assert_eq!(l.value(101.0), 10.0);
        l.settle(Side::Sell, Price::new(103).unwrap(), 10);
        assert_eq!(l.inventory, 0);
        assert_eq!(l.value(50.0), 30.0);
    }
}
