//! Experiment cases, episodes and training.
//!
//! A case is a roster of execution agents added to the background ecology.
//! Every built-in case commits the same total parent volume, 6% of the
//! average daily volume (ADV), split evenly across its agents. ADV itself is
//! measured from agent-free sessions of the same environment.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Float supplies f64 math without std; with std linked the inherent methods win.
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use thiserror::Error;

use crate::book::{AgentId, BookEvent, OrderId, Side, Trade};
use crate::env::{EnvError, EnvironmentParams, Environment, Intent, ProfitSample};
use crate::execution::{
    apply_action_type_i, apply_action_type_ii, build_twap_schedule, discretize_state, q_update,
    select_action, AgentType, DiscreteState, ExecError, Observation, ParentOrder, QLearningParams,
    QTable, RewardParams, StateSpec, TwapSchedule, VwapTracker, N_STATES,
};
use crate::rng::{derive_seed, SimRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown case `{0}`; valid cases are 0..=12")]
    UnknownCase(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("episode aborted at event {seq}: book empty for {events} consecutive events")]
    BookEmpty { seq: u64, events: u64 },
    #[error("artifact sink failed: {0}")]
    Sink(String),
}

/// Exact fraction of ADV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdvFraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl AdvFraction {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        let g = gcd(numerator, denominator).max(1);
        AdvFraction {
            numerator: numerator / g,
            denominator: denominator / g,
        }
    }

    pub fn times(self, k: u64) -> Self {
        Self::new(self.numerator * k, self.denominator)
    }

    pub fn plus(self, other: Self) -> Self {
        Self::new(
            self.numerator * other.denominator + other.numerator * self.denominator,
            self.denominator * other.denominator,
        )
    }

    pub fn as_f64(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Total parent volume committed by every non-empty case (6%, in lowest
/// terms).
pub const TOTAL_PARENT_FRACTION: AdvFraction = AdvFraction {
    numerator: 3,
    denominator: 50,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RosterEntry {
    pub kind: AgentType,
    pub side: Side,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    /// Built-in case number, `None` for user-defined rosters.
    pub id: Option<u8>,
    pub name: String,
    pub roster: Vec<RosterEntry>,
    /// Parent volume of each agent.
    pub parent_fraction: AdvFraction,
}

impl CaseConfig {
    /// A roster that shares 6% ADV evenly across its agents.
    pub fn custom(name: &str, roster: Vec<RosterEntry>) -> Self {
        let n = roster.iter().map(|e| e.count).sum::<usize>().max(1) as u64;
        CaseConfig {
            id: None,
            name: String::from(name),
            roster,
            parent_fraction: AdvFraction::new(
                TOTAL_PARENT_FRACTION.numerator,
                TOTAL_PARENT_FRACTION.denominator * n,
            ),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.roster.iter().map(|e| e.count).sum()
    }

    /// Roster expanded to one `(type, side)` per agent, in roster order.
    pub fn agents(&self) -> Vec<(AgentType, Side)> {
        self.roster
            .iter()
            .flat_map(|e| core::iter::repeat_n((e.kind, e.side), e.count))
            .collect()
    }

    /// Sum of all parent volumes as a fraction of ADV.
    pub fn total_parent_fraction(&self) -> AdvFraction {
        self.parent_fraction.times(self.n_agents() as u64)
    }

    /// Human-readable roster such as `5I+,5I-`.
    pub fn roster_label(&self) -> String {
        let mut s = String::new();
        for (i, e) in self.roster.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            if e.count > 1 {
                s.push_str(&format!("{}", e.count));
            }
            s.push_str(e.kind.label());
            s.push(if e.side == Side::Buy { '+' } else { '-' });
        }
        if s.is_empty() {
            s.push_str("ABM");
        }
        s
    }
}

pub const BUILTIN_CASES: u8 = 13;

/// Built-in case `id` (0..=12).
pub fn load_case(id: u8) -> Result<CaseConfig, SimError> {
    use AgentType::*;
    use Side::*;
    let e = |kind, side, count| RosterEntry { kind, side, count };
    let roster = match id {
        0 => vec![],
        1 => vec![e(TwapS, Sell, 1)],
        2 => vec![e(TwapS, Buy, 5)],
        3 => vec![e(TypeI, Buy, 1)],
        4 => vec![e(TypeI, Sell, 1)],
        5 => vec![e(TypeI, Buy, 1), e(TypeI, Sell, 1)],
        6 => vec![e(TypeII, Buy, 1)],
        7 => vec![e(TypeII, Buy, 1), e(TypeII, Sell, 1)],
        8 => vec![e(TypeII, Buy, 1), e(TypeI, Sell, 1)],
        9 => vec![e(TypeI, Sell, 5)],
        10 => vec![e(TypeII, Buy, 5)],
        11 => vec![e(TypeI, Buy, 5), e(TypeI, Sell, 5)],
        12 => vec![e(TypeII, Buy, 5), e(TypeII, Sell, 5)],
        _ => return Err(SimError::UnknownCase(format!("{id}"))),
    };
    let mut case = CaseConfig::custom(&format!("case{id}"), roster);
    case.id = Some(id);
    Ok(case)
}

/// Parses `"5"` or `"case5"`.
pub fn load_case_by_name(name: &str) -> Result<CaseConfig, SimError> {
    let digits = name.strip_prefix("case").unwrap_or(name);
    digits
        .parse::<u8>()
        .map_err(|_| SimError::UnknownCase(String::from(name)))
        .and_then(load_case)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutionParams {
    /// TWAP decision points per parent order.
    pub decision_points: usize,
    /// Ticks corresponding to a limit depth multiplier of 1.
    pub depth_scale: f64,
}

impl Default for ExecutionParams {
    fn default() -> Self {
        ExecutionParams {
            decision_points: 50,
            depth_scale: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvironmentParams,
    pub learning: QLearningParams,
    pub reward: RewardParams,
    pub execution: ExecutionParams,
    pub episodes: usize,
    /// Environment seeds, cycled over episodes.
    pub seeds: Vec<u64>,
    /// Keep the full book event log in the artifacts.
    pub record_events: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvironmentParams::default(),
            learning: QLearningParams::default(),
            reward: RewardParams::default(),
            execution: ExecutionParams::default(),
            episodes: 100,
            seeds: seed_set(1, 5),
            record_events: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.env.validate()?;
        self.learning.validate()?;
        if self.episodes == 0 {
            return Err(SimError::InvalidConfig(String::from("episodes must be at least 1")));
        }
        if self.seeds.is_empty() {
            return Err(SimError::InvalidConfig(String::from("seed list is empty")));
        }
        if self.execution.decision_points == 0 {
            return Err(SimError::InvalidConfig(String::from("decision_points must be positive")));
        }
        if !(self.execution.depth_scale > 0.0) {
            return Err(SimError::InvalidConfig(String::from("depth_scale must be positive")));
        }
        Ok(())
    }

    pub fn seed_for_episode(&self, episode: usize) -> u64 {
        self.seeds[episode % self.seeds.len()]
    }
}

/// `n` consecutive seeds starting at `base`.
pub fn seed_set(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| base + i).collect()
}

/// Action values and state-visit counts of one learning agent.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub kind: AgentType,
    pub q: QTable,
    pub visits: Vec<u64>,
}

impl LearnerState {
    pub fn new(kind: AgentType) -> Self {
        LearnerState {
            kind,
            q: QTable::for_agent(kind),
            visits: vec![0; N_STATES],
        }
    }

    pub fn policy(&self) -> PolicyGrid {
        greedy_policy_export(&self.q, &self.visits)
    }
}

/// Fresh tables for every learner of the case; `None` for TWAP agents.
pub fn initial_learners(case: &CaseConfig) -> Vec<Option<LearnerState>> {
    case.agents()
        .into_iter()
        .map(|(kind, _)| kind.is_learner().then(|| LearnerState::new(kind)))
        .collect()
}

/// Greedy action per state, `-1` where the state was never visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyGrid {
    actions: Vec<i32>,
}

impl PolicyGrid {
    pub fn action(&self, state: DiscreteState) -> i32 {
        self.actions[state.index()]
    }

    pub fn actions(&self) -> &[i32] {
        &self.actions
    }

    /// 25 x 25 heat map. Row `(inventory - 1) * 5 + (spread - 1)`, column
    /// `(time - 1) * 5 + (volume - 1)`: the outer 5 x 5 grid is inventory by
    /// time and each inner 5 x 5 block is spread by volume.
    pub fn heatmap(&self) -> [[i32; 25]; 25] {
        let mut grid = [[-1; 25]; 25];
        for (i, &a) in self.actions.iter().enumerate() {
            let s = DiscreteState::from_index(i).expect("index in range");
            let row = (s.inventory as usize - 1) * 5 + (s.spread as usize - 1);
            let col = (s.time as usize - 1) * 5 + (s.volume as usize - 1);
            grid[row][col] = a;
        }
        grid
    }

    /// Fraction of states whose entry differs from `other`.
    pub fn fraction_changed(&self, other: &PolicyGrid) -> f64 {
        let changed = self
            .actions
            .iter()
            .zip(&other.actions)
            .filter(|(a, b)| a != b)
            .count();
        changed as f64 / self.actions.len() as f64
    }
}

pub fn greedy_policy_export(q: &QTable, visits: &[u64]) -> PolicyGrid {
    let actions = (0..N_STATES)
        .map(|i| {
            if visits.get(i).copied().unwrap_or(0) == 0 {
                -1
            } else {
                let s = DiscreteState::from_index(i).expect("index in range");
                q.argmax(s) as i32
            }
        })
        .collect();
    PolicyGrid { actions }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub seq: u64,
    pub mid: Option<f64>,
    pub micro: Option<f64>,
}

/// What one execution agent did during an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEpisode {
    pub id: AgentId,
    pub slot: usize,
    pub kind: AgentType,
    pub side: Side,
    pub parent_volume: u64,
    pub executed: u64,
    pub rewards: Vec<f64>,
    /// Decisions whose reward could not be formed (no trades outside the
    /// agent's own yet).
    pub skipped_rewards: usize,
    pub orders_sent: usize,
}

impl AgentEpisode {
    pub fn episode_return(&self) -> f64 {
        crate::execution::episode_return(&self.rewards)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub case_name: String,
    pub seed: u64,
    pub episode: usize,
    pub epsilon: f64,
    /// Book event log (empty unless events were recorded).
    pub events: Vec<BookEvent>,
    pub trades: Vec<Trade>,
    /// Mid and micro price after each event.
    pub prices: Vec<PricePoint>,
    pub agents: Vec<AgentEpisode>,
    pub profit: Vec<ProfitSample>,
    pub failed_market_orders: u64,
    pub ruined_agents: u64,
}

impl RunArtifacts {
    pub fn traded_volume(&self) -> u64 {
        self.trades.iter().map(|t| t.volume).sum()
    }

    /// Micro prices of the events where the book was two-sided.
    pub fn micro_prices(&self) -> Vec<f64> {
        self.prices.iter().filter_map(|p| p.micro).collect()
    }

    pub fn mid_prices(&self) -> Vec<f64> {
        self.prices.iter().filter_map(|p| p.mid).collect()
    }
}

/// Per-episode inputs beyond the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOptions {
    pub seed: u64,
    pub episode: usize,
    pub epsilon: f64,
    /// Assigns agent ids to roster slots: slot `i` gets the `order[i]`-th id
    /// of the execution block. Identity when `None`.
    pub id_order: Option<Vec<usize>>,
}

const NEVER: u64 = u64::MAX;
/// Consecutive empty-book events after which an episode is abandoned.
pub const EMPTY_BOOK_ABORT_EVENTS: u64 = 5_000;

#[derive(Debug, Clone)]
struct Pending {
    state: Option<DiscreteState>,
    action: usize,
    matched: u64,
}

#[derive(Debug, Clone)]
struct LiveAgent {
    id: AgentId,
    slot: usize,
    kind: AgentType,
    parent: ParentOrder,
    schedule: TwapSchedule,
    spec: StateSpec,
    twap_index: usize,
    next_decision: u64,
    pending: Option<Pending>,
    resting: Option<OrderId>,
    finished: bool,
    rewards: Vec<f64>,
    skipped: usize,
    orders_sent: usize,
}

impl LiveAgent {
    fn is_due(&self, seq: u64) -> bool {
        !self.finished && self.next_decision <= seq
    }

    /// TWAP child volume of the slot that contains `seq`.
    fn child_volume_at(&self, seq: u64) -> u64 {
        let i = self
            .schedule
            .decision_points
            .iter()
            .take_while(|&&p| p <= seq)
            .count()
            .max(1);
        self.schedule.child_volumes[i - 1]
    }

    fn next_twap_point_after(&self, seq: u64) -> u64 {
        self.schedule
            .decision_points
            .iter()
            .copied()
            .find(|&p| p > seq)
            .unwrap_or(NEVER)
    }

    fn observe(&self, seq: u64, env: &Environment) -> DiscreteState {
        let q = env.quotes();
        discretize_state(
            &Observation {
                remaining: self.parent.remaining() as f64,
                elapsed: seq as f64,
                volume: q.side_volume(self.parent.side) as f64,
                spread: q.spread().map(|s| s as f64),
            },
            &self.spec,
        )
    }

    /// Rewards the outstanding order and backs it up into the table.
    fn settle_pending(
        &mut self,
        learner: Option<&mut LearnerState>,
        tracker: &VwapTracker,
        t: f64,
        next: Option<DiscreteState>,
        cfg: &ExperimentConfig,
    ) {
        let Some(p) = self.pending.take() else { return };
        let reward = tracker.reward(
            self.id,
            self.parent.side,
            self.parent.remaining(),
            p.matched,
            t,
            &cfg.reward,
        );
        match reward {
            Ok(r) => {
                let r = r.total();
                self.rewards.push(r);
                if let (Some(l), Some(s)) = (learner, p.state) {
                    q_update(
                        &mut l.q,
                        s,
                        p.action,
                        r,
                        next,
                        cfg.learning.learning_rate,
                        cfg.learning.discount,
                    );
                }
            }
            Err(_) => self.skipped += 1,
        }
    }
}

fn parent_volume(adv: f64, fraction: AdvFraction, min_units: usize) -> u64 {
    let v = (adv * fraction.as_f64()).round() as u64;
    v.max(min_units as u64)
}

/// One session of `case` with the given learners. Learner tables are updated
/// in place.
pub fn run_episode(
    case: &CaseConfig,
    cfg: &ExperimentConfig,
    adv: f64,
    opts: &EpisodeOptions,
    learners: &mut [Option<LearnerState>],
) -> Result<RunArtifacts, SimError> {
    let roster = case.agents();
    if learners.len() != roster.len() {
        return Err(SimError::InvalidConfig(format!(
            "{} learner slots for {} agents",
            learners.len(),
            roster.len()
        )));
    }
    let session = cfg.env.session_events;
    let mut env = Environment::new(cfg.env.clone(), opts.seed, cfg.record_events)?;
    let block: Vec<AgentId> = roster.iter().map(|_| env.add_execution_agent()).collect();
    let ids: Vec<AgentId> = match &opts.id_order {
        Some(order) if order.len() == block.len() => order.iter().map(|&i| block[i]).collect(),
        Some(_) => return Err(SimError::InvalidConfig(String::from("id order length mismatch"))),
        None => block.clone(),
    };
    let n_children = cfg.execution.decision_points;
    let mut agents = Vec::with_capacity(roster.len());
    for (slot, &(kind, side)) in roster.iter().enumerate() {
        let total = parent_volume(adv, case.parent_fraction, n_children);
        let schedule = build_twap_schedule(total, n_children, session)?;
        agents.push(LiveAgent {
            id: ids[slot],
            slot,
            kind,
            parent: ParentOrder::new(ids[slot], side, total, session),
            spec: StateSpec::new(total, session),
            next_decision: schedule.decision_points[0],
            schedule,
            twap_index: 0,
            pending: None,
            resting: None,
            finished: false,
            rewards: Vec::new(),
            skipped: 0,
            orders_sent: 0,
        });
    }
    let mut explore = SimRng::seed_from_u64(derive_seed(opts.seed, 1 + opts.episode as u64));
    let mut tracker = VwapTracker::new(&ids);
    let mut prices = Vec::with_capacity(session as usize);
    let mut seen = 0usize;
    let mut empty_for = 0u64;

    while !env.scheduler().is_exhausted() {
        let seq = env.scheduler().next_seq();
        if let Some(slot) = agents.iter().position(|a| a.is_due(seq)) {
            env.claim_event();
            decide(
                &mut agents[slot],
                learners[slot].as_mut(),
                &mut env,
                &tracker,
                &mut explore,
                opts.epsilon,
                cfg,
                seq,
            )?;
        } else {
            let ev = env.next_background_event().expect("budget checked");
            env.act(ev)?;
        }

        for t in &env.trades()[seen..] {
            tracker.record(t);
            for a in agents.iter_mut() {
                if t.involves(a.id) {
                    a.parent.fill(t.volume);
                    if let Some(p) = a.pending.as_mut() {
                        p.matched += t.volume;
                    }
                }
            }
        }
        seen = env.trades().len();

        let t = (seq + 1) as f64 / session as f64;
        for (a, l) in agents.iter_mut().zip(learners.iter_mut()) {
            if !a.finished && a.parent.is_complete() {
                a.settle_pending(l.as_mut(), &tracker, t, None, cfg);
                a.finished = true;
            }
        }

        let q = env.quotes();
        prices.push(PricePoint {
            seq,
            mid: q.mid(),
            micro: q.micro(),
        });
        env.sample_profit(seq);

        if env.book().is_empty() {
            empty_for += 1;
            if empty_for >= EMPTY_BOOK_ABORT_EVENTS {
                return Err(SimError::BookEmpty {
                    seq,
                    events: empty_for,
                });
            }
        } else {
            empty_for = 0;
        }
    }

    for (a, l) in agents.iter_mut().zip(learners.iter_mut()) {
        if !a.finished {
            a.settle_pending(l.as_mut(), &tracker, 1.0, None, cfg);
            a.finished = true;
        }
    }

    let failed = env.failed_market_orders();
    let ruined = env.ruined_agents();
    let (events, trades, profit) = env.into_records();
    Ok(RunArtifacts {
        case_name: case.name.clone(),
        seed: opts.seed,
        episode: opts.episode,
        epsilon: opts.epsilon,
        events,
        trades,
        prices,
        agents: agents
            .into_iter()
            .map(|a| AgentEpisode {
                id: a.id,
                slot: a.slot,
                kind: a.kind,
                side: a.parent.side,
                parent_volume: a.parent.total,
                executed: a.parent.executed,
                rewards: a.rewards,
                skipped_rewards: a.skipped,
                orders_sent: a.orders_sent,
            })
            .collect(),
        profit,
        failed_market_orders: failed,
        ruined_agents: ruined,
    })
}

#[allow(clippy::too_many_arguments)]
fn decide(
    a: &mut LiveAgent,
    mut learner: Option<&mut LearnerState>,
    env: &mut Environment,
    tracker: &VwapTracker,
    explore: &mut SimRng,
    epsilon: f64,
    cfg: &ExperimentConfig,
    seq: u64,
) -> Result<(), SimError> {
    let session = cfg.env.session_events;
    let t = seq as f64 / session as f64;
    let state = a.observe(seq, env);
    a.settle_pending(learner.as_deref_mut(), tracker, t, Some(state), cfg);

    if let Some(id) = a.resting.take() {
        env.execute(a.id, Intent::Cancel { order: id })?;
    }

    let intent = match a.kind {
        AgentType::TwapS => {
            let child = a.schedule.child_volumes[a.twap_index];
            a.pending = Some(Pending {
                state: None,
                action: 0,
                matched: 0,
            });
            a.twap_index += 1;
            a.next_decision = a
                .schedule
                .decision_points
                .get(a.twap_index)
                .copied()
                .unwrap_or(NEVER);
            apply_action_type_i(1.0, child, &a.parent)
        }
        AgentType::TypeI => {
            let l = learner.expect("type I agents learn");
            let action = select_action(&l.q, state, epsilon, explore);
            l.visits[state.index()] += 1;
            let child = a.schedule.child_volumes[a.twap_index];
            let crate::execution::Action::Market { multiplier } = a.kind.action(action)? else {
                unreachable!("type I actions are market orders")
            };
            a.pending = Some(Pending {
                state: Some(state),
                action,
                matched: 0,
            });
            a.twap_index += 1;
            a.next_decision = a
                .schedule
                .decision_points
                .get(a.twap_index)
                .copied()
                .unwrap_or(NEVER);
            apply_action_type_i(multiplier, child, &a.parent)
        }
        AgentType::TypeII => {
            let l = learner.expect("type II agents learn");
            let action = select_action(&l.q, state, epsilon, explore);
            let child = a.child_volume_at(seq);
            let twap_gap = a.next_twap_point_after(seq).saturating_sub(seq);
            let plan = match apply_action_type_ii(
                a.kind.action(action)?,
                &env.quotes(),
                &a.parent,
                child,
                cfg.execution.depth_scale,
                twap_gap,
            ) {
                Ok(plan) => plan,
                Err(ExecError::NoMid) => {
                    a.next_decision = seq + 1;
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            l.visits[state.index()] += 1;
            a.pending = Some(Pending {
                state: Some(state),
                action,
                matched: 0,
            });
            a.next_decision = seq.saturating_add(plan.next_decision_in);
            plan.intent
        }
    };

    if let Some(intent) = intent {
        a.orders_sent += 1;
        let out = env.execute(a.id, intent)?;
        if matches!(intent, Intent::Limit { .. }) {
            a.resting = out.resting_order;
        }
    }
    Ok(())
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub learners: Vec<Option<LearnerState>>,
    /// Episode returns per roster slot (TWAP agents included).
    pub returns: Vec<Vec<f64>>,
    /// Per slot and episode, the fraction of states whose greedy action
    /// changed during the episode. Empty for TWAP agents.
    pub policy_changes: Vec<Vec<f64>>,
    pub epsilons: Vec<f64>,
}

/// Runs `cfg.episodes` episodes, cycling through the seed list and decaying
/// exploration per episode. Each finished episode is handed to `sink`.
pub fn train<F>(
    case: &CaseConfig,
    cfg: &ExperimentConfig,
    adv: f64,
    learners: Option<Vec<Option<LearnerState>>>,
    mut sink: F,
) -> Result<TrainOutcome, SimError>
where
    F: FnMut(&RunArtifacts) -> Result<(), SimError>,
{
    cfg.validate()?;
    let mut learners = learners.unwrap_or_else(|| initial_learners(case));
    let n = learners.len();
    let mut returns = vec![Vec::with_capacity(cfg.episodes); n];
    let mut policy_changes = vec![Vec::new(); n];
    let mut epsilons = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let epsilon = cfg.learning.epsilon.at(episode);
        let before: Vec<Option<PolicyGrid>> =
            learners.iter().map(|l| l.as_ref().map(LearnerState::policy)).collect();
        let opts = EpisodeOptions {
            seed: cfg.seed_for_episode(episode),
            episode,
            epsilon,
            id_order: None,
        };
        let art = run_episode(case, cfg, adv, &opts, &mut learners)?;
        for a in &art.agents {
            returns[a.slot].push(a.episode_return());
        }
        for (slot, (l, b)) in learners.iter().zip(before).enumerate() {
            if let (Some(l), Some(b)) = (l, b) {
                policy_changes[slot].push(l.policy().fraction_changed(&b));
            }
        }
        epsilons.push(epsilon);
        sink(&art)?;
    }
    Ok(TrainOutcome {
        learners,
        returns,
        policy_changes,
        epsilons,
    })
}

/// Sessions averaged when measuring ADV.
pub const ADV_CALIBRATION_SESSIONS: usize = 20;
/// First seed of the ADV calibration sessions.
pub const ADV_CALIBRATION_SEED: u64 = 0xADF0_0000;

/// Total traded volume of one agent-free session.
pub fn session_traded_volume(env: &EnvironmentParams, seed: u64) -> Result<u64, SimError> {
    let cfg = ExperimentConfig {
        env: env.clone(),
        record_events: false,
        ..ExperimentConfig::default()
    };
    let case = load_case(0)?;
    let opts = EpisodeOptions {
        seed,
        episode: 0,
        epsilon: 0.0,
        id_order: None,
    };
    Ok(run_episode(&case, &cfg, 0.0, &opts, &mut [])?.traded_volume())
}

/// Mean traded volume over `sessions` agent-free sessions.
pub fn calibrate_adv(env: &EnvironmentParams, sessions: usize, base_seed: u64) -> Result<f64, SimError> {
    let sessions = sessions.max(1);
    let mut total = 0u64;
    for i in 0..sessions {
        total += session_traded_volume(env, base_seed + i as u64)?;
    }
    Ok(total as f64 / sessions as f64)
}
