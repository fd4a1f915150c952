//! Price-time-priority limit order book.
//!
//! Prices are integer ticks (tick size 1). Bids are matched best (highest)
//! price first, asks lowest price first, and within a price level strictly in
//! arrival order. Every public mutation is one book operation with its own
//! sequence number; the optional event log records each operation and each
//! fill it produced together with the top of book before and after.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub type AgentId = u32;
pub type OrderId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BookError {
    #[error("order {0} rejected: id already used in this run")]
    DuplicateOrderId(OrderId),
    #[error("order rejected: volume must be positive")]
    ZeroVolume,
    #[error("price must be a positive tick count, got {0}")]
    NonPositivePrice(i64),
    #[error("no trades left after excluding agent")]
    EmptyTradeSet,
}

/// Limit price in ticks. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(i64);

impl Price {
    pub fn new(ticks: i64) -> Result<Self, BookError> {
        if ticks > 0 {
            Ok(Price(ticks))
        } else {
            Err(BookError::NonPositivePrice(ticks))
        }
    }

    pub fn ticks(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Order side. For resting orders `Buy` is the bid side; for trades it is the
/// aggressor's direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    /// +1 for buys, -1 for sells.
    pub fn sign(self) -> i64 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }

    fn index(self) -> usize {
        match self {
            Side::Buy => 0,
            Side::Sell => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Order {
    pub id: OrderId,
    pub agent: AgentId,
    pub side: Side,
    pub price: Price,
    pub volume: u64,
    /// Sequence number of the operation that accepted the order. Assigned by
    /// the book; any value supplied on submission is overwritten.
    pub timestamp: u64,
}

impl Order {
    pub fn limit(id: OrderId, agent: AgentId, side: Side, price: Price, volume: u64) -> Self {
        Order {
            id,
            agent,
            side,
            price,
            volume,
            timestamp: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trade {
    pub price: Price,
    pub volume: u64,
    pub aggressor_side: Side,
    pub aggressor_agent: AgentId,
    pub passive_agent: AgentId,
    pub passive_order: OrderId,
    pub timestamp: u64,
}

impl Trade {
    pub fn involves(&self, agent: AgentId) -> bool {
        self.aggressor_agent == agent || self.passive_agent == agent
    }
}

/// Best price and the total resting volume at that price.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quote {
    pub price: Price,
    pub volume: u64,
}

/// Top-of-book snapshot and the observables derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Quotes {
    pub bid: Option<Quote>,
    pub ask: Option<Quote>,
}

impl Quotes {
    pub fn best_bid(&self) -> Option<Price> {
        self.bid.map(|q| q.price)
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.ask.map(|q| q.price)
    }

    pub fn bid_volume(&self) -> u64 {
        self.bid.map_or(0, |q| q.volume)
    }

    pub fn ask_volume(&self) -> u64 {
        self.ask.map_or(0, |q| q.volume)
    }

    pub fn side_volume(&self, side: Side) -> u64 {
        match side {
            Side::Buy => self.bid_volume(),
            Side::Sell => self.ask_volume(),
        }
    }

    pub fn spread(&self) -> Option<i64> {
        Some(self.ask?.price.ticks() - self.bid?.price.ticks())
    }

    pub fn mid(&self) -> Option<f64> {
        Some((self.bid?.price.as_f64() + self.ask?.price.as_f64()) / 2.0)
    }

    /// `(V_ask * P_bid + V_bid * P_ask) / (V_bid + V_ask)`: each price is
    /// weighted by the opposite side's top volume.
    pub fn micro(&self) -> Option<f64> {
        let bid = self.bid?;
        let ask = self.ask?;
        let vb = bid.volume as f64;
        let va = ask.volume as f64;
        Some((va * bid.price.as_f64() + vb * ask.price.as_f64()) / (vb + va))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    LimitPlaced,
    MarketExec,
    Cancel,
    Trade,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::LimitPlaced => "limit",
            EventKind::MarketExec => "market",
            EventKind::Cancel => "cancel",
            EventKind::Trade => "trade",
        }
    }
}

/// One row of the book's event stream.
///
/// Fills are logged before the submission that caused them, so each row's
/// `after` snapshot is the `before` of the next row. For `LimitPlaced` the
/// volume is the submitted volume and for `MarketExec` the requested volume,
/// which is what [`LimitOrderBook::replay`] needs. A market order that found
/// no liquidity appears as a `MarketExec` row with no price and no fills.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BookEvent {
    pub seq: u64,
    pub kind: EventKind,
    /// Submitting agent; the aggressor for trades.
    pub agent: AgentId,
    pub side: Side,
    /// Limit price, fill price, cancelled order's price, or last fill price
    /// of a market order.
    pub price: Option<Price>,
    pub volume: u64,
    pub order_id: Option<OrderId>,
    pub passive_agent: Option<AgentId>,
    pub before: Quotes,
    pub after: Quotes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitOutcome {
    pub trades: Vec<Trade>,
    /// Volume left resting in the book (0 when fully filled on entry).
    pub resting: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Level {
    orders: VecDeque<Order>,
    volume: u64,
}

/// Cumulative limit-order volume accounting for one side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VolumeLedger {
    pub accepted: u64,
    pub matched: u64,
    pub cancelled: u64,
}

#[derive(Debug, Clone, Default)]
pub struct LimitOrderBook {
    bids: BTreeMap<i64, Level>,
    asks: BTreeMap<i64, Level>,
    locations: BTreeMap<OrderId, (Side, Price)>,
    used_ids: BTreeSet<OrderId>,
    seq: u64,
    ledgers: [VolumeLedger; 2],
    log: Option<Vec<BookEvent>>,
}

impl PartialEq for LimitOrderBook {
    /// Books compare equal when their resting orders (including priority and
    /// timestamps) and operation counters agree. The event log is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.bids == other.bids
            && self.asks == other.asks
            && self.locations == other.locations
            && self.used_ids == other.used_ids
            && self.seq == other.seq
            && self.ledgers == other.ledgers
    }
}

impl LimitOrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// A book that records every operation into an event log.
    pub fn with_event_log() -> Self {
        LimitOrderBook {
            log: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn events(&self) -> &[BookEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn take_events(&mut self) -> Vec<BookEvent> {
        self.log.as_mut().map(core::mem::take).unwrap_or_default()
    }

    /// Number of operations applied so far.
    pub fn sequence(&self) -> u64 {
        self.seq
    }

    pub fn submit_limit(&mut self, order: Order) -> Result<LimitOutcome, BookError> {
        if order.volume == 0 {
            return Err(BookError::ZeroVolume);
        }
        if self.used_ids.contains(&order.id) {
            return Err(BookError::DuplicateOrderId(order.id));
        }
        self.used_ids.insert(order.id);
        let submitted = order.volume;
        let seq = self.next_seq();
        let before = self.quotes();
        let mut order = Order {
            timestamp: seq,
            ..order
        };
        self.ledgers[order.side.index()].accepted += order.volume;

        let (trades, left) = self.match_incoming(
            order.agent,
            order.side,
            Some(order.price),
            order.volume,
            seq,
        );
        self.ledgers[order.side.index()].matched += order.volume - left;

        if left > 0 {
            order.volume = left;
            let book = self.side_mut(order.side);
            let level = book.entry(order.price.ticks()).or_default();
            level.volume += left;
            level.orders.push_back(order);
            self.locations.insert(order.id, (order.side, order.price));
        }
        let after = self.quotes();
        self.record(BookEvent {
            seq,
            kind: EventKind::LimitPlaced,
            agent: order.agent,
            side: order.side,
            price: Some(order.price),
            volume: submitted,
            order_id: Some(order.id),
            passive_agent: None,
            before,
            after,
        });
        Ok(LimitOutcome {
            trades,
            resting: left,
        })
    }

    /// Walks the opposite side until `volume` is exhausted or the side is
    /// empty. An empty opposite side yields no trades and a logged event.
    pub fn submit_market(
        &mut self,
        agent: AgentId,
        side: Side,
        volume: u64,
    ) -> Result<Vec<Trade>, BookError> {
        if volume == 0 {
            return Err(BookError::ZeroVolume);
        }
        let seq = self.next_seq();
        let before = self.quotes();
        let (trades, _) = self.match_incoming(agent, side, None, volume, seq);
        let after = self.quotes();
        self.record(BookEvent {
            seq,
            kind: EventKind::MarketExec,
            agent,
            side,
            price: trades.last().map(|t| t.price),
            volume,
            order_id: None,
            passive_agent: None,
            before,
            after,
        });
        Ok(trades)
    }

    /// Removes a resting order. Returns the cancelled remainder, or `None`
    /// (without touching the book) if the id is not resting.
    pub fn cancel(&mut self, id: OrderId) -> Option<Order> {
        let (side, price) = *self.locations.get(&id)?;
        let seq = self.next_seq();
        let before = self.quotes();
        let book = self.side_mut(side);
        let level = book.get_mut(&price.ticks())?;
        let pos = level.orders.iter().position(|o| o.id == id)?;
        let order = level.orders.remove(pos)?;
        level.volume -= order.volume;
        if level.orders.is_empty() {
            book.remove(&price.ticks());
        }
        self.locations.remove(&id);
        self.ledgers[side.index()].cancelled += order.volume;
        let after = self.quotes();
        self.record(BookEvent {
            seq,
            kind: EventKind::Cancel,
            agent: order.agent,
            side,
            price: Some(price),
            volume: order.volume,
            order_id: Some(id),
            passive_agent: None,
            before,
            after,
        });
        Some(order)
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.locations.contains_key(&id)
    }

    /// Resting order by id.
    pub fn order(&self, id: OrderId) -> Option<&Order> {
        let (side, price) = self.locations.get(&id)?;
        let book = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        book.get(&price.ticks())?.orders.iter().find(|o| o.id == id)
    }

    pub fn quotes(&self) -> Quotes {
        Quotes {
            bid: self.bids.iter().next_back().map(|(&p, l)| Quote {
                price: Price(p),
                volume: l.volume,
            }),
            ask: self.asks.iter().next().map(|(&p, l)| Quote {
                price: Price(p),
                volume: l.volume,
            }),
        }
    }

    pub fn best_bid(&self) -> Option<Price> {
        self.bids.keys().next_back().map(|&p| Price(p))
    }

    pub fn best_ask(&self) -> Option<Price> {
        self.asks.keys().next().map(|&p| Price(p))
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    pub fn is_crossed(&self) -> bool {
        matches!((self.best_bid(), self.best_ask()), (Some(b), Some(a)) if b >= a)
    }

    /// Total resting volume on one side.
    pub fn resting_volume(&self, side: Side) -> u64 {
        let book = match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        };
        book.values().map(|l| l.volume).sum()
    }

    pub fn ledger(&self, side: Side) -> VolumeLedger {
        self.ledgers[side.index()]
    }

    /// `(price, volume)` per level, best first.
    pub fn depth(&self, side: Side) -> Vec<(Price, u64)> {
        match side {
            Side::Buy => self
                .bids
                .iter()
                .rev()
                .map(|(&p, l)| (Price(p), l.volume))
                .collect(),
            Side::Sell => self
                .asks
                .iter()
                .map(|(&p, l)| (Price(p), l.volume))
                .collect(),
        }
    }

    /// All resting orders of one side in matching priority.
    pub fn resting_orders(&self, side: Side) -> Vec<Order> {
        let mut out = Vec::new();
        match side {
            Side::Buy => {
                for l in self.bids.values().rev() {
                    out.extend(l.orders.iter().copied());
                }
            }
            Side::Sell => {
                for l in self.asks.values() {
                    out.extend(l.orders.iter().copied());
                }
            }
        }
        out
    }

    /// Rebuilds a book by re-applying the submissions and cancellations of
    /// an event stream. Fill rows are derived, so they are skipped.
    pub fn replay(events: &[BookEvent]) -> Result<LimitOrderBook, BookError> {
        let mut book = LimitOrderBook::with_event_log();
        for ev in events {
            match ev.kind {
                EventKind::Trade => {}
                EventKind::LimitPlaced => {
                    let price = ev.price.ok_or(BookError::NonPositivePrice(0))?;
                    let id = ev.order_id.unwrap_or_default();
                    book.submit_limit(Order::limit(id, ev.agent, ev.side, price, ev.volume))?;
                }
                EventKind::MarketExec => {
                    book.submit_market(ev.agent, ev.side, ev.volume)?;
                }
                EventKind::Cancel => {
                    if let Some(id) = ev.order_id {
                        book.cancel(id);
                    }
                }
            }
        }
        Ok(book)
    }

    fn next_seq(&mut self) -> u64 {
        let s = self.seq;
        self.seq += 1;
        s
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<i64, Level> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    fn record(&mut self, ev: BookEvent) {
        if let Some(log) = self.log.as_mut() {
            log.push(ev);
        }
    }

    /// Matches an incoming order against the opposite side. `limit` of
    /// `None` is a market order. Returns the fills and the unfilled volume.
    fn match_incoming(
        &mut self,
        agent: AgentId,
        side: Side,
        limit: Option<Price>,
        mut volume: u64,
        seq: u64,
    ) -> (Vec<Trade>, u64) {
        let mut trades = Vec::new();
        let passive_side = side.opposite();
        while volume > 0 {
            let best = match passive_side {
                Side::Sell => self.asks.keys().next().copied(),
                Side::Buy => self.bids.keys().next_back().copied(),
            };
            let Some(level_price) = best else { break };
            let crosses = match (side, limit) {
                (_, None) => true,
                (Side::Buy, Some(p)) => level_price <= p.ticks(),
                (Side::Sell, Some(p)) => level_price >= p.ticks(),
            };
            if !crosses {
                break;
            }
            let before = if self.log.is_some() {
                self.quotes()
            } else {
                Quotes::default()
            };
            let book = self.side_mut(passive_side);
            let level = book.get_mut(&level_price).expect("best level exists");
            let resting = level.orders.front_mut().expect("levels are never empty");
            let fill = volume.min(resting.volume);
            resting.volume -= fill;
            level.volume -= fill;
            volume -= fill;
            let passive = *resting;
            if resting.volume == 0 {
                level.orders.pop_front();
                if level.orders.is_empty() {
                    book.remove(&level_price);
                }
                self.locations.remove(&passive.id);
            }
            self.ledgers[passive_side.index()].matched += fill;
            let trade = Trade {
                price: Price(level_price),
                volume: fill,
                aggressor_side: side,
                aggressor_agent: agent,
                passive_agent: passive.agent,
                passive_order: passive.id,
                timestamp: seq,
            };
            trades.push(trade);
            if self.log.is_some() {
                let after = self.quotes();
                self.record(BookEvent {
                    seq,
                    kind: EventKind::Trade,
                    agent,
                    side,
                    price: Some(trade.price),
                    volume: fill,
                    order_id: Some(passive.id),
                    passive_agent: Some(passive.agent),
                    before,
                    after,
                });
            }
        }
        (trades, volume)
    }
}

/// Volume-weighted average trade price, optionally leaving out every trade
/// the given agent took part in (as aggressor or as resting counterparty).
pub fn vwap(trades: &[Trade], exclude: Option<AgentId>) -> Result<f64, BookError> {
    let mut notional = 0.0;
    let mut volume = 0u64;
    for t in trades
        .iter()
        .filter(|t| exclude.is_none_or(|a| !t.involves(a)))
    {
        notional += t.price.as_f64() * t.volume as f64;
        volume += t.volume;
    }
    if volume == 0 {
        return Err(BookError::EmptyTradeSet);
    }
    Ok(notional / volume as f64)
}
