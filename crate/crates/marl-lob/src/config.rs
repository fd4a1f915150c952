//! Run configuration. A TOML file whose tables mirror the library parameter
//! structs; every key is optional and falls back to the library default.

use std::fmt;
use std::path::{Path, PathBuf};

use marl_lob_core::book::Side;
use marl_lob_core::complexity::{DimensionOptions, RadiusRange};
use marl_lob_core::env::{ArrivalRates, EnvError, EnvironmentParams, VolumeLaw};
use marl_lob_core::execution::{AgentType, EpsilonSchedule, ExecError, QLearningParams, RewardParams};
use marl_lob_core::sim::{
    load_case, load_case_by_name, seed_set, CaseConfig, ExecutionParams, ExperimentConfig, RosterEntry, SimError,
};
use marl_lob_core::stats::{HillVariant, ImpactBins, MomentConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem, anchored to a line of the file when possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        ConfigError {
            path: None,
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}", p.display())?,
            None => write!(f, "<config>")?,
        }
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
            if let Some(col) = self.column {
                write!(f, ":{col}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Built-in case by number (`5`) or name (`"case5"`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CaseRef {
    Id(u8),
    Name(String),
}

impl std::str::FromStr for CaseRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<u8>() {
            Ok(id) => CaseRef::Id(id),
            Err(_) => CaseRef::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KindSpec {
    S,
    I,
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideSpec {
    Buy,
    Sell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterSpec {
    pub kind: KindSpec,
    pub side: SideSpec,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

/// Which episodes get their event log, price series and profit series
/// written. Returns, tables and policies are always written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dump {
    #[default]
    Last,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeSpec {
    pub log_mean: f64,
    pub log_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSpec {
    pub fundamentalist: f64,
    pub chartist: f64,
    pub liquidity_provider: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentSection {
    pub initial_price: i64,
    pub n_fundamentalists: usize,
    pub n_chartists: usize,
    pub n_liquidity_providers: usize,
    pub fundamental_value_sigma: f64,
    pub fundamental_drift: f64,
    pub chartist_ewma_lambda: f64,
    pub lp_depth_range: [i64; 2],
    pub order_volume: VolumeSpec,
    pub arrival_rates: RatesSpec,
    pub cancel_rate: f64,
    pub session_events: u64,
    pub wealth_budget: f64,
    pub profit_sample_interval: u64,
}

impl From<&EnvironmentParams> for EnvironmentSection {
    fn from(p: &EnvironmentParams) -> Self {
        EnvironmentSection {
            initial_price: p.initial_price,
            n_fundamentalists: p.n_fundamentalists,
            n_chartists: p.n_chartists,
            n_liquidity_providers: p.n_liquidity_providers,
            fundamental_value_sigma: p.fundamental_value_sigma,
            fundamental_drift: p.fundamental_drift,
            chartist_ewma_lambda: p.chartist_ewma_lambda,
            lp_depth_range: [p.lp_depth_range.0, p.lp_depth_range.1],
            order_volume: VolumeSpec {
                log_mean: p.order_volume.log_mean,
                log_sigma: p.order_volume.log_sigma,
            },
            arrival_rates: RatesSpec {
                fundamentalist: p.arrival_rates.fundamentalist,
                chartist: p.arrival_rates.chartist,
                liquidity_provider: p.arrival_rates.liquidity_provider,
            },
            cancel_rate: p.cancel_rate,
            session_events: p.session_events,
            wealth_budget: p.wealth_budget,
            profit_sample_interval: p.profit_sample_interval,
        }
    }
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        (&EnvironmentParams::default()).into()
    }
}

impl Default for VolumeSpec {
    fn default() -> Self {
        EnvironmentSection::default().order_volume
    }
}

impl Default for RatesSpec {
    fn default() -> Self {
        EnvironmentSection::default().arrival_rates
    }
}

impl EnvironmentSection {
    pub fn params(&self) -> EnvironmentParams {
        EnvironmentParams {
            initial_price: self.initial_price,
            n_fundamentalists: self.n_fundamentalists,
            n_chartists: self.n_chartists,
            n_liquidity_providers: self.n_liquidity_providers,
            fundamental_value_sigma: self.fundamental_value_sigma,
            fundamental_drift: self.fundamental_drift,
            chartist_ewma_lambda: self.chartist_ewma_lambda,
            lp_depth_range: (self.lp_depth_range[0], self.lp_depth_range[1]),
            order_volume: VolumeLaw {
                log_mean: self.order_volume.log_mean,
                log_sigma: self.order_volume.log_sigma,
            },
            arrival_rates: ArrivalRates {
                fundamentalist: self.arrival_rates.fundamentalist,
                chartist: self.arrival_rates.chartist,
                liquidity_provider: self.arrival_rates.liquidity_provider,
            },
            cancel_rate: self.cancel_rate,
            session_events: self.session_events,
            wealth_budget: self.wealth_budget,
            profit_sample_interval: self.profit_sample_interval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSection {
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_initial: f64,
    pub epsilon_floor: f64,
    /// Per-episode multiplicative decay. When absent, the decay reaches the
    /// floor on the last episode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_decay: Option<f64>,
}

impl Default for LearningSection {
    fn default() -> Self {
        let q = QLearningParams::default();
        LearningSection {
            learning_rate: q.learning_rate,
            discount: q.discount,
            epsilon_initial: q.epsilon.initial,
            epsilon_floor: q.epsilon.floor,
            epsilon_decay: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    pub penalty_weight: f64,
    pub time_sensitivity: f64,
}

impl Default for RewardSection {
    fn default() -> Self {
        let r = RewardParams::default();
        RewardSection {
            penalty_weight: r.penalty_weight,
            time_sensitivity: r.time_sensitivity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutionSection {
    pub decision_points: usize,
    pub depth_scale: f64,
}

impl Default for ExecutionSection {
    fn default() -> Self {
        let e = ExecutionParams::default();
        ExecutionSection {
            decision_points: e.decision_points,
            depth_scale: e.depth_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HillSpec {
    Classic,
    BiasCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub resamples: usize,
    pub garch_resamples: usize,
    pub confidence: f64,
    pub bootstrap_seed: u64,
    pub adf_lags: usize,
    pub hill_fraction: f64,
    pub hill_variant: HillSpec,
    pub acf_max_lag: usize,
    pub impact_bins: [f64; 2],
    pub impact_bin_count: usize,
    pub embedding_min: usize,
    pub embedding_max: usize,
    /// Embedding delay; the correlation time of the series when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay: Option<usize>,
    /// Theiler window; the delay when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theiler_window: Option<usize>,
    /// Percentiles of the pair distances bounding the radii.
    pub radius_percentiles: [f64; 2],
    pub radius_count: usize,
    pub max_points: usize,
    pub segment_length: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let m = MomentConfig::default();
        let b = ImpactBins::default();
        let d = DimensionOptions::default();
        let RadiusRange::Percentiles { lo, hi, count } = d.radii else {
            unreachable!("default radii are percentiles")
        };
        AnalysisSection {
            resamples: m.resamples,
            garch_resamples: m.garch_resamples,
            confidence: m.confidence,
            bootstrap_seed: m.seed,
            adf_lags: m.adf_lags,
            hill_fraction: m.hill_fraction,
            hill_variant: HillSpec::BiasCorrected,
            acf_max_lag: 100,
            impact_bins: [b.lo, b.hi],
            impact_bin_count: b.count,
            embedding_min: 1,
            embedding_max: 8,
            delay: None,
            theiler_window: None,
            radius_percentiles: [lo, hi],
            radius_count: count,
            max_points: d.max_points,
            segment_length: 250,
        }
    }
}

impl AnalysisSection {
    pub fn moments(&self) -> MomentConfig {
        MomentConfig {
            resamples: self.resamples,
            garch_resamples: self.garch_resamples,
            confidence: self.confidence,
            seed: self.bootstrap_seed,
            adf_lags: self.adf_lags,
            hill_fraction: self.hill_fraction,
            hill_variant: match self.hill_variant {
                HillSpec::Classic => HillVariant::Classic,
                HillSpec::BiasCorrected => HillVariant::BiasCorrected,
            },
        }
    }

    pub fn impact_bins(&self) -> ImpactBins {
        ImpactBins {
            lo: self.impact_bins[0],
            hi: self.impact_bins[1],
            count: self.impact_bin_count,
        }
    }

    pub fn dimension(&self) -> DimensionOptions {
        DimensionOptions {
            max_lag: self.acf_max_lag,
            delay: self.delay,
            theiler_window: self.theiler_window,
            radii: RadiusRange::Percentiles {
                lo: self.radius_percentiles[0],
                hi: self.radius_percentiles[1],
                count: self.radius_count,
            },
            max_points: self.max_points,
        }
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        let bad = |k, m: &str| Err((k, m.to_string()));
        if self.resamples < 2 || self.garch_resamples < 2 {
            return bad("resamples", "bootstrap needs at least 2 resamples");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence", "must lie in (0, 1)");
        }
        if !(self.hill_fraction > 0.0 && self.hill_fraction < 1.0) {
            return bad("hill_fraction", "must lie in (0, 1)");
        }
        if self.acf_max_lag == 0 {
            return bad("acf_max_lag", "must be positive");
        }
        let [lo, hi] = self.impact_bins;
        if !(lo > 0.0 && hi > lo) || self.impact_bin_count == 0 {
            return bad("impact_bins", "need 0 < lo < hi and a positive bin count");
        }
        if self.embedding_min == 0 || self.embedding_max < self.embedding_min {
            return bad("embedding_min", "need 1 <= embedding_min <= embedding_max");
        }
        let [plo, phi] = self.radius_percentiles;
        if !(0.0 <= plo && plo < phi && phi <= 1.0) || self.radius_count < 2 {
            return bad("radius_percentiles", "need 0 <= lo < hi <= 1 and at least 2 radii");
        }
        if self.delay == Some(0) {
            return bad("delay", "must be positive");
        }
        if self.max_points < 2 || self.segment_length == 0 {
            return bad("max_points", "max_points must be at least 2 and segment_length positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Built-in case; ignored when `roster` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<CaseRef>,
    /// Name of a custom roster.
    pub name: String,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Average daily volume used to size parent orders. Measured from
    /// agent-free sessions when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adv: Option<f64>,
    pub dump: Dump,
    pub roster: Vec<RosterSpec>,
    pub environment: EnvironmentSection,
    pub learning: LearningSection,
    pub reward: RewardSection,
    pub execution: ExecutionSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig {
            case: None,
            name: "custom".to_string(),
            episodes: e.episodes,
            seeds: seed_set(1, 5),
            out: None,
            adv: None,
            dump: Dump::Last,
            roster: Vec::new(),
            environment: EnvironmentSection::default(),
            learning: LearningSection::default(),
            reward: RewardSection::default(),
            execution: ExecutionSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

/// Command-line values that replace their configuration counterparts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub case: Option<CaseRef>,
    pub episodes: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Line of the first `key = ...` assignment, ignoring table nesting.
fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key)
            .map(|rest| rest.trim_start().starts_with('=') || rest.starts_with('.'))
            .unwrap_or(false)
    })
    .map(|i| i + 1)
}

pub fn parse_seed_list(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad seed `{part}`"))?;
                let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad seed `{part}`"))?;
                if b < a {
                    return Err(format!("empty seed range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?),
        }
    }
    if out.is_empty() {
        return Err("seed list is empty".to_string());
    }
    Ok(out)
}

impl RunConfig {
    /// Parses `text`; `path` only labels error messages.
    pub fn parse(text: &str, path: Option<&Path>) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unzip();
            ConfigError {
                path: path.map(Path::to_path_buf),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.validate().map_err(|(key, message)| ConfigError {
            path: path.map(Path::to_path_buf),
            line: key_line(text, key),
            column: None,
            message,
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: Some(path.to_path_buf()),
            ..ConfigError::new(format!("cannot read config: {e}"))
        })?;
        Self::parse(&text, Some(path))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(c) = &o.case {
            self.case = Some(c.clone());
            self.roster.clear();
        }
        if let Some(n) = o.episodes {
            self.episodes = n;
        }
        if let Some(s) = &o.seeds {
            self.seeds = s.clone();
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        self.validate()
            .map_err(|(key, message)| ConfigError::new(format!("{key}: {message}")))
    }

    /// Checks everything the library would reject, naming the offending key.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        self.case().map_err(|e| ("case", e.to_string()))?;
        if let Some(adv) = self.adv {
            if !(adv > 0.0 && adv.is_finite()) {
                return Err(("adv", "must be positive".to_string()));
            }
        }
        self.analysis.validate()?;
        self.experiment().validate().map_err(|e| {
            let key = match &e {
                SimError::Env(EnvError::InvalidParam { name, .. }) => *name,
                SimError::Exec(ExecError::InvalidParam { name, .. }) => match *name {
                    "epsilon" => "epsilon_initial",
                    n => n,
                },
                SimError::InvalidConfig(m) if m.contains("episodes") => "episodes",
                SimError::InvalidConfig(m) if m.contains("seed") => "seeds",
                SimError::InvalidConfig(m) if m.contains("decision_points") => "decision_points",
                SimError::InvalidConfig(m) if m.contains("depth_scale") => "depth_scale",
                _ => "",
            };
            (key, e.to_string())
        })
    }

    /// The roster to run: the custom one when given, else the built-in case
    /// (case 0 when neither is set).
    pub fn case(&self) -> Result<CaseConfig, SimError> {
        if !self.roster.is_empty() {
            let roster = self
                .roster
                .iter()
                .map(|r| RosterEntry {
                    kind: match r.kind {
                        KindSpec::S => AgentType::TwapS,
                        KindSpec::I => AgentType::TypeI,
                        KindSpec::II => AgentType::TypeII,
                    },
                    side: match r.side {
                        SideSpec::Buy => Side::Buy,
                        SideSpec::Sell => Side::Sell,
                    },
                    count: r.count,
                })
                .collect::<Vec<_>>();
            if roster.iter().any(|r| r.count == 0) {
                return Err(SimError::InvalidConfig("roster counts must be positive".to_string()));
            }
            return Ok(CaseConfig::custom(&self.name, roster));
        }
        match &self.case {
            None => load_case(0),
            Some(CaseRef::Id(id)) => load_case(*id),
            Some(CaseRef::Name(n)) => load_case_by_name(n),
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let l = &self.learning;
        let epsilon = match l.epsilon_decay {
            Some(decay) => EpsilonSchedule {
                initial: l.epsilon_initial,
                decay,
                floor: l.epsilon_floor,
            },
            None => EpsilonSchedule::spanning(self.episodes, l.epsilon_initial, l.epsilon_floor),
        };
        ExperimentConfig {
            env: self.environment.params(),
            learning: QLearningParams {
                learning_rate: l.learning_rate,
                discount: l.discount,
                epsilon,
            },
            reward: RewardParams {
                penalty_weight: self.reward.penalty_weight,
                time_sensitivity: self.reward.time_sensitivity,
            },
            execution: ExecutionParams {
                decision_points: self.execution.decision_points,
                depth_scale: self.execution.depth_scale,
            },
            episodes: self.episodes,
            seeds: self.seeds.clone(),
            record_events: true,
        }
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of [`RunConfig::to_toml`], hex encoded.
    /// Digest of the settings that determine the simulated output; the
    /// output directory is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_library_defaults() {
        let cfg = RunConfig::parse("", None).unwrap();
        assert_eq!(cfg, RunConfig::default());
        let e = cfg.experiment();
        assert_eq!(e.env, EnvironmentParams::default());
        assert_eq!(e.learning, QLearningParams::default());
        assert_eq!(cfg.case().unwrap(), load_case(0).unwrap());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.case = Some(CaseRef::Id(7));
        cfg.adv = Some(1.5e6);
        cfg.analysis.delay = Some(10);
        let back = RunConfig::parse(&cfg.to_toml(), None).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = "episodes = 10\nseeds = [1, 2\n";
        let e = RunConfig::parse(text, Some(Path::new("run.toml"))).unwrap_err();
        assert!(e.line.is_some());
        assert!(e.to_string().starts_with("run.toml:"));
    }

    #[test]
    fn unknown_keys_are_rejected_at_their_line() {
        let text = "episodes = 10\n\n[environment]\nn_fundamentalist = 3\n";
        let e = RunConfig::parse(text, None).unwrap_err();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn invalid_values_point_at_their_key() {
        let text = "case = 3\n[environment]\ncancel_rate = 0.0\n";
        let e = RunConfig::parse(text, None).unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = RunConfig::parse("episodes = 0\n", None).unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = RunConfig::parse("seeds = []\ncase = 13\n", None).unwrap_err();
        assert_eq!(e.line, Some(2));
    }

    #[test]
    fn custom_rosters_share_six_percent() {
        let text = "[[roster]]\nkind = \"II\"\nside = \"buy\"\ncount = 3\n";
        let cfg = RunConfig::parse(text, None).unwrap();
        let case = cfg.case().unwrap();
        assert_eq!(case.n_agents(), 3);
        assert_eq!(case.total_parent_fraction().as_f64(), 0.06);
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("7").unwrap(), vec![7]);
        assert_eq!(parse_seed_list("1,4, 9").unwrap(), vec![1, 4, 9]);
        assert_eq!(parse_seed_list("3..5").unwrap(), vec![3, 4, 5]);
        assert!(parse_seed_list("").is_err());
        assert!(parse_seed_list("5..3").is_err());
    }
}
