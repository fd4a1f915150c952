//! CSV artifacts. Every file is rendered in memory and then written
//! atomically, so a reader never sees a half-written file and re-running a
//! step over the same inputs reproduces the same bytes.

use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use marl_lob_core::book::{BookEvent, EventKind, Price, Quote, Quotes, Side};
use marl_lob_core::complexity::{DeltaDimension, DimensionCurve, PhaseSpace};
use marl_lob_core::env::ProfitSample;
use marl_lob_core::execution::DiscreteState;
use marl_lob_core::sim::{LearnerState, PricePoint};
use marl_lob_core::stats::{AcfCurve, MomentReport, PriceImpactCurve};

pub const EVENT_HEADER: [&str; 12] = [
    "seq", "kind", "agent_id", "side", "price", "volume", "best_bid", "best_ask", "bid_vol", "ask_vol", "mid", "micro",
];

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Builds a CSV document in memory.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("writing to memory");
        Table { w }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("writing to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("writing to memory")
    }

    pub fn save(self, path: &Path) -> Result<()> {
        write_atomic(path, &self.into_bytes())
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn events_csv(events: &[BookEvent]) -> Vec<u8> {
    let mut t = Table::new(EVENT_HEADER);
    for e in events {
        let q = &e.after;
        t.row([
            e.seq.to_string(),
            e.kind.as_str().to_string(),
            e.agent.to_string(),
            e.side.as_str().to_string(),
            opt(e.price),
            e.volume.to_string(),
            opt(q.best_bid()),
            opt(q.best_ask()),
            q.bid_volume().to_string(),
            q.ask_volume().to_string(),
            opt(q.mid()),
            opt(q.micro()),
        ]);
    }
    t.into_bytes()
}

fn parse_kind(s: &str) -> Option<EventKind> {
    Some(match s {
        "limit" => EventKind::LimitPlaced,
        "market" => EventKind::MarketExec,
        "cancel" => EventKind::Cancel,
        "trade" => EventKind::Trade,
        _ => return None,
    })
}

fn parse_side(s: &str) -> Option<Side> {
    match s {
        "buy" => Some(Side::Buy),
        "sell" => Some(Side::Sell),
        _ => None,
    }
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Option<Option<T>> {
    if s.is_empty() {
        Some(None)
    } else {
        s.parse().ok().map(Some)
    }
}

/// Reads an event log back. Order ids and passive agents are not part of the
/// file and come back as `None`; each row's `before` quotes are the previous
/// row's `after`.
pub fn read_events(path: &Path) -> Result<Vec<BookEvent>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if r.headers()?.iter().ne(EVENT_HEADER) {
        bail!("{}: unexpected event log header", path.display());
    }
    let mut out = Vec::new();
    let mut before = Quotes::default();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || anyhow::anyhow!("{}: malformed row {}", path.display(), i + 2);
        let quote = |p: &str, v: &str| -> Result<Option<Quote>> {
            Ok(match parse_opt::<i64>(p).ok_or_else(bad)? {
                Some(ticks) => Some(Quote {
                    price: Price::new(ticks).map_err(|_| bad())?,
                    volume: v.parse().map_err(|_| bad())?,
                }),
                None => None,
            })
        };
        let after = Quotes {
            bid: quote(&rec[6], &rec[8])?,
            ask: quote(&rec[7], &rec[9])?,
        };
        let price = match parse_opt::<i64>(&rec[4]).ok_or_else(bad)? {
            Some(t) => Some(Price::new(t).map_err(|_| bad())?),
            None => None,
        };
        out.push(BookEvent {
            seq: rec[0].parse().map_err(|_| bad())?,
            kind: parse_kind(&rec[1]).ok_or_else(bad)?,
            agent: rec[2].parse().map_err(|_| bad())?,
            side: parse_side(&rec[3]).ok_or_else(bad)?,
            price,
            volume: rec[5].parse().map_err(|_| bad())?,
            order_id: None,
            passive_agent: None,
            before,
            after,
        });
        before = after;
    }
    Ok(out)
}

/// `+1`/`-1` per trade row, in log order.
pub fn tradesigns(events: &[BookEvent]) -> Vec<f64> {
    events
        .iter()
        .filter(|e| e.kind == EventKind::Trade)
        .map(|e| e.side.sign() as f64)
        .collect()
}

pub fn prices_csv(prices: &[PricePoint]) -> Vec<u8> {
    let mut t = Table::new(["seq", "mid", "micro"]);
    for p in prices {
        t.row([p.seq.to_string(), opt(p.mid), opt(p.micro)]);
    }
    t.into_bytes()
}

/// Micro prices of the rows where the book was two-sided.
pub fn read_micro_prices(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        match rec.get(2).map(parse_opt::<f64>) {
            Some(Some(Some(v))) => out.push(v),
            Some(Some(None)) => {}
            _ => bail!("{}: malformed row {}", path.display(), i + 2),
        }
    }
    Ok(out)
}

pub fn profit_csv(samples: &[ProfitSample]) -> Vec<u8> {
    let mut t = Table::new(["seq", "liquidity_providers", "fundamentalists", "chartists", "execution"]);
    for s in samples {
        t.row([
            s.seq.to_string(),
            s.liquidity_providers.to_string(),
            s.fundamentalists.to_string(),
            s.chartists.to_string(),
            s.execution.to_string(),
        ]);
    }
    t.into_bytes()
}

pub fn qtable_csv(l: &LearnerState) -> Vec<u8> {
    let mut t = Table::new(["state", "inventory", "time", "volume", "spread", "visits", "action", "value"]);
    for (state, action, value) in l.q.cells() {
        let s = DiscreteState::from_index(state).expect("table rows are states");
        t.row([
            state.to_string(),
            s.inventory.to_string(),
            s.time.to_string(),
            s.volume.to_string(),
            s.spread.to_string(),
            l.visits[state].to_string(),
            action.to_string(),
            value.to_string(),
        ]);
    }
    t.into_bytes()
}

/// The greedy-policy heat map: one row per (inventory, spread), one column
/// per (time, volume), `-1` for unvisited states.
pub fn policy_csv(l: &LearnerState) -> Vec<u8> {
    let mut header = vec!["inventory".to_string(), "spread".to_string()];
    for time in 1..=5 {
        for volume in 1..=5 {
            header.push(format!("t{time}v{volume}"));
        }
    }
    let mut t = Table::new(header);
    for (r, row) in l.policy().heatmap().iter().enumerate() {
        let mut fields = vec![(r / 5 + 1).to_string(), (r % 5 + 1).to_string()];
        fields.extend(row.iter().map(i32::to_string));
        t.row(fields);
    }
    t.into_bytes()
}

pub const MOMENT_HEADER: [&str; 5] = ["moment", "value", "ci_low", "ci_high", "error"];

pub fn moments_csv(rep: &MomentReport) -> Vec<u8> {
    let mut t = Table::new(MOMENT_HEADER);
    for (name, m) in rep.rows() {
        match m {
            Ok(m) => t.row([name.to_string(), m.value.to_string(), m.ci_low.to_string(), m.ci_high.to_string(), String::new()]),
            Err(e) => t.row([name.to_string(), String::new(), String::new(), String::new(), e.to_string()]),
        }
    }
    t.into_bytes()
}

/// One row of `moments.csv`; `None` where the estimator failed.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub name: String,
    pub estimate: Option<(f64, f64, f64)>,
}

pub fn read_moments(path: &Path) -> Result<Vec<MomentRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
        let estimate = match (f(1), f(2), f(3)) {
            (Some(v), Some(lo), Some(hi)) => Some((v, lo, hi)),
            _ => None,
        };
        out.push(MomentRow {
            name: rec.get(0).unwrap_or_default().to_string(),
            estimate,
        });
    }
    if out.len() != 8 {
        bail!("{}: expected 8 moments, found {}", path.display(), out.len());
    }
    Ok(out)
}

pub fn acf_tradesigns_csv(raw: &AcfCurve, demeaned: Option<&AcfCurve>) -> Vec<u8> {
    let mut t = Table::new(["lag", "acf", "acf_demeaned"]);
    for lag in 1..=raw.max_lag() {
        t.row([
            lag.to_string(),
            opt(raw.at(lag)),
            opt(demeaned.and_then(|d| d.at(lag))),
        ]);
    }
    t.into_bytes()
}

pub fn acf_csv(curve: &AcfCurve) -> Vec<u8> {
    let mut t = Table::new(["lag", "acf"]);
    for lag in 1..=curve.max_lag() {
        t.row([lag.to_string(), opt(curve.at(lag))]);
    }
    t.into_bytes()
}

pub fn impact_csv(curve: &PriceImpactCurve) -> Vec<u8> {
    let mut t = Table::new(["omega_lo", "omega_hi", "omega", "trades", "mean_impact"]);
    let means = curve.mean_impact();
    for (i, c) in curve.centres().iter().enumerate() {
        t.row([
            curve.edges[i].to_string(),
            curve.edges[i + 1].to_string(),
            c.to_string(),
            curve.counts[i].to_string(),
            opt(means[i]),
        ]);
    }
    t.into_bytes()
}

pub const DIMENSION_HEADER: [&str; 7] = ["m", "tau", "theiler", "dimension", "r_lo", "r_hi", "scaling_found"];

pub fn dimension_csv(curve: &DimensionCurve) -> Vec<u8> {
    let mut t = Table::new(DIMENSION_HEADER);
    for (m, c) in &curve.points {
        t.row([
            m.to_string(),
            curve.delay.to_string(),
            curve.theiler_window.to_string(),
            c.dimension.to_string(),
            opt(c.radii.get(c.region.0)),
            opt(c.radii.get(c.region.1)),
            c.scaling_found.to_string(),
        ]);
    }
    t.into_bytes()
}

/// `(m, D)` pairs of a `dimension_curve.csv`.
pub fn read_dimensions(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let m = rec.get(0).and_then(|s| s.parse().ok());
        let d = rec.get(3).and_then(|s| s.parse().ok());
        match (m, d) {
            (Some(m), Some(d)) => out.push((m, d)),
            _ => bail!("{}: malformed row {}", path.display(), i + 2),
        }
    }
    Ok(out)
}

pub fn phase_space_csv(ps: &PhaseSpace) -> Vec<u8> {
    let mut t = Table::new(["t", "x_t", "x_t_minus_tau", "highlighted"]);
    let (a, b) = ps.highlight;
    for &(time, x, lagged) in &ps.points {
        t.row([
            time.to_string(),
            x.to_string(),
            lagged.to_string(),
            u8::from((a..b).contains(&time)).to_string(),
        ]);
    }
    t.into_bytes()
}

/// A run's label and moments for the cross-case table.
pub struct CompareColumn {
    pub label: String,
    pub moments: Vec<MomentRow>,
}

fn std_of(c: &CompareColumn) -> f64 {
    c.moments
        .iter()
        .find(|m| m.name == "std")
        .and_then(|m| m.estimate)
        .map_or(f64::NEG_INFINITY, |e| e.0)
}

/// Moments as rows and runs as columns, columns ordered by decreasing
/// standard deviation of returns. Cells read `value [lo, hi]`.
pub fn moments_compare_csv(columns: &mut [CompareColumn]) -> Vec<u8> {
    columns.sort_by(|a, b| std_of(b).total_cmp(&std_of(a)));
    let mut header = vec!["moment".to_string()];
    header.extend(columns.iter().map(|c| c.label.clone()));
    let mut t = Table::new(header);
    for (i, name) in marl_lob_core::stats::MOMENT_NAMES.iter().enumerate() {
        let mut row = vec![name.to_string()];
        for c in columns.iter() {
            row.push(match c.moments.get(i).and_then(|m| m.estimate) {
                Some((v, lo, hi)) => format!("{v:.6e} [{lo:.6e}, {hi:.6e}]"),
                None => String::new(),
            });
        }
        t.row(row);
    }
    t.into_bytes()
}

pub fn delta_dimension_csv(rows: &[(String, Option<DeltaDimension>)]) -> Vec<u8> {
    let mut t = Table::new(["run", "delta_d", "delta_d_high", "common_m"]);
    for (label, d) in rows {
        match d {
            Some(d) => t.row([label.clone(), d.all.to_string(), d.high.to_string(), d.common.to_string()]),
            None => t.row([label.clone(), String::new(), String::new(), "0".to_string()]),
        }
    }
    t.into_bytes()
}
