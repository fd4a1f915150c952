use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use marl_lob_core::env::EnvironmentParams;
use marl_lob_core::sim::{
    session_traded_volume, train, AgentEpisode, RunArtifacts, SimError, ADV_CALIBRATION_SEED, ADV_CALIBRATION_SESSIONS,
};
use rayon::prelude::*;

use crate::artifacts::{events_csv, policy_csv, prices_csv, profit_csv, qtable_csv, write_atomic, Table};
use crate::config::{CaseRef, ConfigError, Dump, Overrides, RunConfig};
use crate::manifest::{Artifact, ArtifactKind, RunManifest, Stage};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub config: Option<PathBuf>,
    /// Several cases run side by side, each in its own subdirectory.
    pub cases: Vec<CaseRef>,
    pub episodes: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
}

/// Mean traded volume of the agent-free calibration sessions, computed in
/// parallel. Matches `marl_lob_core::sim::calibrate_adv`.
pub fn calibrate_adv(env: &EnvironmentParams) -> Result<f64, SimError> {
    let volumes = (0..ADV_CALIBRATION_SESSIONS as u64)
        .into_par_iter()
        .map(|i| session_traded_volume(env, ADV_CALIBRATION_SEED + i))
        .collect::<Result<Vec<u64>, _>>()?;
    Ok(volumes.iter().sum::<u64>() as f64 / volumes.len() as f64)
}

struct EpisodeRow {
    episode: usize,
    seed: u64,
    epsilon: f64,
    agents: Vec<AgentEpisode>,
}

fn rel(p: &str) -> PathBuf {
    PathBuf::from(p)
}

/// Trains one configured case and writes its artifacts under `out`.
pub fn run_case(cfg: &RunConfig, adv: f64, out: &Path, adv_seconds: f64) -> Result<RunManifest> {
    let case = cfg.case().map_err(|e| ConfigError {
        path: None,
        line: None,
        column: None,
        message: e.to_string(),
    })?;
    let exp = cfg.experiment();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut artifacts = vec![Artifact {
        kind: ArtifactKind::Config,
        path: rel("config.toml"),
        episode: None,
        seed: None,
        slot: None,
    }];
    write_atomic(&out.join("config.toml"), cfg.to_toml().as_bytes())?;

    let started = Instant::now();
    let mut rows = Vec::with_capacity(exp.episodes);
    let last = exp.episodes - 1;
    let outcome = train(&case, &exp, adv, None, |art: &RunArtifacts| {
        rows.push(EpisodeRow {
            episode: art.episode,
            seed: art.seed,
            epsilon: art.epsilon,
            agents: art.agents.clone(),
        });
        if cfg.dump == Dump::All || art.episode == last {
            let dir = format!("episode_{:04}", art.episode);
            let files = [
                (ArtifactKind::Events, "events.csv", events_csv(&art.events)),
                (ArtifactKind::Prices, "prices.csv", prices_csv(&art.prices)),
                (ArtifactKind::Profit, "profit.csv", profit_csv(&art.profit)),
            ];
            for (kind, name, bytes) in files {
                let path = Path::new(&dir).join(name);
                write_atomic(&out.join(&path), &bytes).map_err(|e| SimError::Sink(e.to_string()))?;
                artifacts.push(Artifact {
                    kind,
                    path,
                    episode: Some(art.episode),
                    seed: Some(art.seed),
                    slot: None,
                });
            }
        }
        Ok(())
    })
    .with_context(|| format!("{}: training aborted", case.name))?;
    let train_seconds = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let mut t = Table::new([
        "episode",
        "seed",
        "epsilon",
        "slot",
        "agent_id",
        "kind",
        "side",
        "parent_volume",
        "executed",
        "orders_sent",
        "return",
        "policy_change",
    ]);
    for r in &rows {
        for a in &r.agents {
            let change = outcome.policy_changes[a.slot].get(r.episode).map(f64::to_string);
            t.row([
                r.episode.to_string(),
                r.seed.to_string(),
                r.epsilon.to_string(),
                a.slot.to_string(),
                a.id.to_string(),
                a.kind.label().to_string(),
                a.side.as_str().to_string(),
                a.parent_volume.to_string(),
                a.executed.to_string(),
                a.orders_sent.to_string(),
                a.episode_return().to_string(),
                change.unwrap_or_default(),
            ]);
        }
    }
    t.save(&out.join("returns.csv"))?;
    artifacts.push(Artifact {
        kind: ArtifactKind::Returns,
        path: rel("returns.csv"),
        episode: None,
        seed: None,
        slot: None,
    });

    for (slot, l) in outcome.learners.iter().enumerate() {
        let Some(l) = l else { continue };
        for (kind, name, bytes) in [
            (ArtifactKind::Qtable, format!("qtable_slot{slot}.csv"), qtable_csv(l)),
            (ArtifactKind::Policy, format!("policy_slot{slot}.csv"), policy_csv(l)),
        ] {
            write_atomic(&out.join(&name), &bytes)?;
            artifacts.push(Artifact {
                kind,
                path: PathBuf::from(name),
                episode: None,
                seed: None,
                slot: Some(slot),
            });
        }
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        case_id: case.id,
        case_name: case.name.clone(),
        roster: case.roster_label(),
        seeds: exp.seeds.clone(),
        episodes: exp.episodes,
        adv,
        stages: vec![
            Stage {
                name: "calibrate_adv".to_string(),
                seconds: adv_seconds,
            },
            Stage {
                name: "train".to_string(),
                seconds: train_seconds,
            },
            Stage {
                name: "write".to_string(),
                seconds: started.elapsed().as_secs_f64(),
            },
        ],
        artifacts,
    };
    manifest.save(out)?;
    print_summary(&manifest, &outcome.returns);
    Ok(manifest)
}

fn print_summary(m: &RunManifest, returns: &[Vec<f64>]) {
    let mut s = format!("{}: {} episodes, ADV {:.0}\n", m.label(), m.episodes, m.adv);
    for (slot, r) in returns.iter().enumerate() {
        let k = r.len().min(10);
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len().max(1) as f64;
        s.push_str(&format!(
            "  slot {slot}: mean return first {k} {:+.5}, last {k} {:+.5}\n",
            mean(&r[..k]),
            mean(&r[r.len() - k..])
        ));
    }
    print!("{s}");
}

pub fn cmd_run(req: &RunRequest) -> Result<Vec<PathBuf>, CliError> {
    let base = match &req.config {
        Some(p) => RunConfig::from_file(p).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    let cases: Vec<Option<CaseRef>> = if req.cases.is_empty() {
        vec![None]
    } else {
        req.cases.iter().cloned().map(Some).collect()
    };
    let multi = cases.len() > 1;
    let mut jobs = Vec::new();
    for case in cases {
        let mut cfg = base.clone();
        cfg.apply(&Overrides {
            case,
            episodes: req.episodes,
            seeds: req.seeds.clone(),
            out: req.out.clone(),
        })
        .map_err(CliError::Usage)?;
        let name = cfg.case().map_err(|e| CliError::Usage(ConfigError {
            path: req.config.clone(),
            line: None,
            column: None,
            message: e.to_string(),
        }))?.name;
        let root = cfg.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
        let out = if multi || cfg.out.is_none() { root.join(&name) } else { root };
        jobs.push((cfg, out));
    }

    // One calibration per distinct environment.
    let adv_cache: Mutex<BTreeMap<String, (f64, f64)>> = Mutex::new(BTreeMap::new());
    let results: Vec<Result<PathBuf>> = jobs
        .par_iter()
        .map(|(cfg, out)| {
            let (adv, secs) = match cfg.adv {
                Some(a) => (a, 0.0),
                None => {
                    let key = toml::to_string(&cfg.environment).expect("environment serialises");
                    let cached = adv_cache.lock().expect("cache lock").get(&key).copied();
                    match cached {
                        Some(v) => v,
                        None => {
                            let t = Instant::now();
                            let adv = calibrate_adv(&cfg.environment.params())?;
                            let v = (adv, t.elapsed().as_secs_f64());
                            adv_cache.lock().expect("cache lock").insert(key, v);
                            v
                        }
                    }
                }
            };
            run_case(cfg, adv, out, secs)?;
            Ok(out.join(crate::manifest::MANIFEST_FILE))
        })
        .collect();
    results.into_iter().map(|r| r.map_err(CliError::Runtime)).collect()
}
